"""Linear exosystem driving the leaders' common velocity.

eta' = S eta, v_c = F eta.  Leaders are kinematic: every leader moves with
v_c, so their relative offsets never change.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .matrix_equations import check_detectability, is_hurwitz, matrix_exponential


@dataclass(frozen=True, eq=False)
class LeaderModel:
    S: np.ndarray
    F: np.ndarray
    eta0: np.ndarray
    q_l0: np.ndarray

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.S, dtype=float))
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        eta0 = np.asarray(self.eta0, dtype=float).ravel()
        q_l0 = np.asarray(self.q_l0, dtype=float).ravel()
        w = S.shape[0]
        if S.shape != (w, w) or F.shape[1] != w or eta0.shape != (w,):
            raise ValueError(f"inconsistent shapes S{S.shape} F{F.shape} eta0{eta0.shape}")
        if q_l0.size % F.shape[0]:
            raise ValueError("q_l0 length is not a multiple of the dimension d")
        for name, v in (("S", S), ("F", F), ("eta0", eta0), ("q_l0", q_l0)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def w(self) -> int:
        return self.S.shape[0]

    @property
    def d(self) -> int:
        return self.F.shape[0]

    @property
    def n_leaders(self) -> int:
        return self.q_l0.size // self.d

    @cached_property
    def _augmented(self):
        w, d = self.w, self.d
        A = np.zeros((w + d, w + d))
        A[:w, :w] = self.S
        A[w:, :w] = self.F
        return A

    def displacement(self, t: float):
        """(eta(t), integral_0^t F eta) from one augmented matrix exponential."""
        x = matrix_exponential(self._augmented, t)[:, : self.w] @ self.eta0
        return x[: self.w], x[self.w :]

    def is_detectable(self) -> bool:
        return check_detectability(self.S, self.F)

    def is_bounded(self, horizon: float = 100.0, samples: int = 400, eps: float = 1e-6,
                   growth_tol: float = 1e-6) -> bool:
        """Numerical certificate that S has no unstable modes and eta(t) stays bounded.

        S - eps I must be Hurwitz (no eigenvalue with positive real part) and
        the orbit norm must not grow between the two halves of the horizon,
        which rules out Jordan blocks on the imaginary axis.
        """
        if not is_hurwitz(self.S - eps * np.eye(self.w)):
            return False
        ts = np.linspace(0.0, horizon, samples)
        E = matrix_exponential(self.S, ts[1])
        norms = np.empty(samples)
        x = self.eta0.copy()
        for k in range(samples):
            norms[k] = np.linalg.norm(x)
            x = E @ x
        half = samples // 2
        return norms[half:].max() <= (1.0 + growth_tol) * norms[:half].max() + 1e-12


def leader_velocity(m: LeaderModel, eta) -> np.ndarray:
    return m.F @ np.asarray(eta, dtype=float)


def leader_flow(m: LeaderModel, t: float):
    """Closed-form (eta(t), stacked leader positions q_l(t))."""
    eta_t, disp = m.displacement(t)
    return eta_t, m.q_l0 + np.tile(disp, m.n_leaders)
