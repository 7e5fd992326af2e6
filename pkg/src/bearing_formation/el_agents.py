"""Euler-Lagrange follower models  M(q) q'' + C(q, q') q' + D(q) q' = tau.

Every evaluator broadcasts over leading axes, so a batch of followers sharing
one model is evaluated in a single call (q of shape (k, d) etc.).
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

from .errors import NonPDInertia


class ELModel(ABC):
    """Linearly parameterized Euler-Lagrange dynamics.

    ``theta`` is ground truth for simulation only; controllers see the
    regressor and measured states.
    """

    d: int
    r: int
    m_lower: float

    @property
    @abstractmethod
    def theta(self) -> np.ndarray: ...

    @abstractmethod
    def inertia(self, q) -> np.ndarray: ...

    @abstractmethod
    def coriolis(self, q, qdot) -> np.ndarray: ...

    @abstractmethod
    def damping(self, q) -> np.ndarray: ...

    @abstractmethod
    def regressor(self, q, qdot, zeta, zetadot) -> np.ndarray:
        """Y with Y @ theta = M zetadot + C zeta + D qdot."""

    def bias(self, q, qdot) -> np.ndarray:
        """C(q, qdot) qdot + D qdot."""
        qdot = np.asarray(qdot, dtype=float)
        return ((self.coriolis(q, qdot) + self.damping(q)) @ qdot[..., None])[..., 0]

    def solve_inertia(self, q, rhs) -> np.ndarray:
        """M(q)^-1 rhs by Cholesky; models with structured M may override."""
        try:
            chol = np.linalg.cholesky(self.inertia(q))
        except np.linalg.LinAlgError:
            raise NonPDInertia("inertia matrix is not positive definite") from None
        y = np.linalg.solve(chol, rhs[..., None])
        return np.linalg.solve(np.swapaxes(chol, -1, -2), y)[..., 0]


@dataclass(frozen=True)
class PlanarTwoDOF(ELModel):
    """Two-coordinate planar agent with a q2-dependent first inertia.

    M = diag(a + b cos q2, c), D = diag(d1, d2) and the Coriolis matrix

        [[k sin(q2) q2', -(b/2) sin(q2) q1'],
         [(b/2) sin(q2) q1',            0]].

    The Christoffel-symbol value of k is -b/2, which makes M' - 2C skew
    symmetric.  ``coriolis_11`` can be set to -b to reproduce the variant
    with the doubled diagonal coefficient, which breaks skew symmetry.
    """

    a: float = 2.35
    b: float = 0.16
    c: float = 0.10
    d1: float = 0.3
    d2: float = 0.5
    coriolis_11: float | None = None

    d = 2
    r = 8

    @property
    def k11(self) -> float:
        return -0.5 * self.b if self.coriolis_11 is None else self.coriolis_11

    @property
    def m_lower(self) -> float:
        return min(self.a - abs(self.b), self.c)

    @property
    def theta(self) -> np.ndarray:
        h = 0.5 * self.b
        return np.array([self.a, self.b, self.k11, -h, self.d1, self.c, h, self.d2])

    def inertia(self, q):
        q = np.asarray(q, dtype=float)
        M = np.zeros(q.shape[:-1] + (2, 2))
        M[..., 0, 0] = self.a + self.b * np.cos(q[..., 1])
        M[..., 1, 1] = self.c
        return M

    def bias(self, q, qdot):
        q, qdot = np.asarray(q, dtype=float), np.asarray(qdot, dtype=float)
        s = np.sin(q[..., 1])
        u, v = qdot[..., 0], qdot[..., 1]
        h = 0.5 * self.b
        return np.stack([(self.k11 - h) * s * u * v + self.d1 * u,
                         h * s * u * u + self.d2 * v], axis=-1)

    def solve_inertia(self, q, rhs):
        """M is diagonal, so the solve is a division."""
        m11 = self.a + self.b * np.cos(np.asarray(q, dtype=float)[..., 1])
        if not (np.all(m11 > 0) and self.c > 0):
            raise NonPDInertia("inertia matrix is not positive definite")
        rhs = np.asarray(rhs, dtype=float)
        return np.stack([rhs[..., 0] / m11, rhs[..., 1] / self.c], axis=-1)

    def inertia_dot(self, q, qdot):
        q, qdot = np.asarray(q, dtype=float), np.asarray(qdot, dtype=float)
        Md = np.zeros(q.shape[:-1] + (2, 2))
        Md[..., 0, 0] = -self.b * np.sin(q[..., 1]) * qdot[..., 1]
        return Md

    def coriolis(self, q, qdot):
        q, qdot = np.asarray(q, dtype=float), np.asarray(qdot, dtype=float)
        s = np.sin(q[..., 1])
        h = 0.5 * self.b
        C = np.zeros(q.shape[:-1] + (2, 2))
        C[..., 0, 0] = self.k11 * s * qdot[..., 1]
        C[..., 0, 1] = -h * s * qdot[..., 0]
        C[..., 1, 0] = h * s * qdot[..., 0]
        return C

    def damping(self, q):
        q = np.asarray(q, dtype=float)
        D = np.zeros(q.shape[:-1] + (2, 2))
        D[..., 0, 0] = self.d1
        D[..., 1, 1] = self.d2
        return D

    def regressor(self, q, qdot, zeta, zetadot):
        q, qdot = np.asarray(q, dtype=float), np.asarray(qdot, dtype=float)
        z, zd = np.asarray(zeta, dtype=float), np.asarray(zetadot, dtype=float)
        s, c = np.sin(q[..., 1]), np.cos(q[..., 1])
        Y = np.zeros(q.shape[:-1] + (2, 8))
        Y[..., 0, 0] = zd[..., 0]
        Y[..., 0, 1] = c * zd[..., 0]
        Y[..., 0, 2] = s * qdot[..., 1] * z[..., 0]
        Y[..., 0, 3] = s * qdot[..., 0] * z[..., 1]
        Y[..., 0, 4] = qdot[..., 0]
        Y[..., 1, 5] = zd[..., 1]
        Y[..., 1, 6] = s * qdot[..., 0] * z[..., 0]
        Y[..., 1, 7] = qdot[..., 1]
        return Y


def planar_2dof_model(coriolis: str = "christoffel") -> PlanarTwoDOF:
    """The planar follower used by the bundled scenarios.

    ``coriolis="printed"`` keeps the doubled C11 coefficient (-0.16), giving
    theta = (2.35, 0.16, -0.16, -0.08, 0.3, 0.1, 0.08, 0.5); the default
    Christoffel form has theta_3 = -0.08.
    """
    if coriolis == "christoffel":
        return PlanarTwoDOF()
    if coriolis == "printed":
        return PlanarTwoDOF(coriolis_11=-0.16)
    raise ValueError(f"unknown coriolis variant {coriolis!r}")


MODELS = {
    "planar_2dof": lambda: planar_2dof_model("christoffel"),
    "planar_2dof_printed": lambda: planar_2dof_model("printed"),
}


def regressor(model: ELModel, q, qdot, zeta, zetadot) -> np.ndarray:
    return model.regressor(q, qdot, zeta, zetadot)


def forward_dynamics(model: ELModel, q, qdot, tau) -> np.ndarray:
    """q'' = M^-1 (tau - C q' - D q')."""
    return model.solve_inertia(q, np.asarray(tau, dtype=float) - model.bias(q, qdot))
