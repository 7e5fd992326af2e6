"""Bearing vectors, projectors and the bearing Laplacian.

The bearing g_ij points from agent j toward agent i, i.e. it is q_i - q_j
normalized.  Projectors are orientation invariant, so a bearing may be given
for either (i, j) or (j, i).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import MissingBearing, NonUnitBearing, NotLocalizable
from .graph import GraphTopology, followers_reachable_from_leaders

UNIT_TOL = 1e-9


def _as_unit(g, tol=UNIT_TOL) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    norm = np.linalg.norm(g)
    if not abs(norm - 1.0) <= tol:
        raise NonUnitBearing(f"bearing {g.tolist()} has norm {norm!r}")
    return g / norm


@dataclass(frozen=True)
class BearingSet:
    d: int
    entries: Mapping[tuple[int, int], np.ndarray]

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("bearings need dimension d >= 2")
        clean = {}
        for (i, j), g in self.entries.items():
            g = _as_unit(g)
            if g.shape != (self.d,):
                raise ValueError(f"bearing ({i},{j}) has shape {g.shape}, expected ({self.d},)")
            g.setflags(write=False)
            clean[(int(i), int(j))] = g
        for (i, j), g in clean.items():
            if (j, i) in clean and not np.allclose(clean[(j, i)], -g, atol=1e-12, rtol=0):
                raise ValueError(f"bearings ({i},{j}) and ({j},{i}) are not antisymmetric")
        object.__setattr__(self, "entries", clean)

    def get(self, i: int, j: int) -> np.ndarray:
        """Bearing g_ij, using -g_ji when only the reverse orientation is stored."""
        if (i, j) in self.entries:
            return self.entries[(i, j)]
        if (j, i) in self.entries:
            return -self.entries[(j, i)]
        raise MissingBearing((i, j))

    @classmethod
    def from_positions(cls, g: GraphTopology, q: np.ndarray) -> BearingSet:
        q = np.asarray(q, dtype=float).reshape(g.n, -1)
        entries = {}
        for i, j in g.edges:
            v = q[i - 1] - q[j - 1]
            entries[(i, j)] = v / np.linalg.norm(v)
        return cls(q.shape[1], entries)


def projector(g) -> np.ndarray:
    g = _as_unit(g)
    return np.eye(g.size) - np.outer(g, g)


@dataclass(frozen=True)
class BearingLaplacian:
    matrix: np.ndarray
    n: int
    n_leaders: int
    d: int
    lambda_min_ff: float

    @property
    def _k(self):
        return self.n_leaders * self.d

    @property
    def ll(self):
        return self.matrix[: self._k, : self._k]

    @property
    def lf(self):
        return self.matrix[: self._k, self._k :]

    @property
    def fl(self):
        return self.matrix[self._k :, : self._k]

    @property
    def ff(self):
        return self.matrix[self._k :, self._k :]


def bearing_laplacian(g: GraphTopology, b: BearingSet) -> BearingLaplacian:
    d = b.d
    B = np.zeros((g.n * d, g.n * d))
    for i, j in g.edges:
        P = projector(b.get(i, j))
        a, c = (i - 1) * d, (j - 1) * d
        B[a : a + d, a : a + d] += P
        B[c : c + d, c : c + d] += P
        B[a : a + d, c : c + d] -= P
        B[c : c + d, a : a + d] -= P
    k = g.n_leaders * d
    lam = float(np.linalg.eigvalsh(B[k:, k:])[0])
    B.setflags(write=False)
    return BearingLaplacian(B, g.n, g.n_leaders, d, lam)


@dataclass(frozen=True)
class LocalizabilityCertificate:
    localizable: bool
    lambda_min: float
    tol: float
    reachable: bool | None = None


def default_tolerance(B: BearingLaplacian) -> float:
    return 1e-8 * max(1.0, float(np.linalg.norm(B.ff, 2)))


def certify_localizability(B: BearingLaplacian, tol: float | None = None,
                           graph: GraphTopology | None = None) -> LocalizabilityCertificate:
    """Check that B_ff is nonsingular.

    With ``tol=None`` the threshold is 1e-8 relative to the spectral norm of
    B_ff; an explicit ``tol`` is used as an absolute threshold.  When the graph
    is supplied, leader reachability is reported alongside: a localizable
    instance must always be reachable.
    """
    if tol is None:
        tol = default_tolerance(B)
    reachable = None if graph is None else followers_reachable_from_leaders(graph)
    return LocalizabilityCertificate(B.lambda_min_ff > tol, B.lambda_min_ff, tol, reachable)


def target_followers(B: BearingLaplacian, q_l_star, tol: float | None = None) -> np.ndarray:
    """Solve B_fl q_l* + B_ff q_f* = 0 for the stacked follower targets."""
    cert = certify_localizability(B, tol)
    if not cert.localizable:
        raise NotLocalizable(f"lambda_min(B_ff) = {cert.lambda_min:.3e} <= {cert.tol:.1e}")
    q_l_star = np.asarray(q_l_star, dtype=float).ravel()
    return cho_solve(cho_factor(B.ff), -B.fl @ q_l_star)
