"""Distributed adaptive formation law for one follower.

Reference velocity and sliding variable of follower i:

    zeta_i = F eta_hat_i - sum_{j in N_i} P_ij (q_i - q_j)
    s_i    = q_i' - zeta_i

so that stacking over followers gives s_f = q_f' - v_hat_f + B_fl q_l + B_ff q_f
and the formation error obeys q_tilde' = -B_ff q_tilde + s_f + v_tilde_f.
Control and adaptation:

    tau_i         = Y_i theta_hat_i - Lambda_s s_i
    theta_hat_i'  = -Lambda_theta Y_i^T s_i

where Y_i is evaluated at (q_i, q_i', zeta_i, zeta_i').  The law needs the
agent's own state, its observer, and neighbors' positions and velocities;
accelerations are never used.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bearings import BearingLaplacian, BearingSet, projector
from .el_agents import ELModel
from .graph import GraphTopology


def _check_pd(name, A):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    if A.shape[0] != A.shape[1] or not np.allclose(A, A.T, atol=1e-12):
        raise ValueError(f"{name} must be a symmetric square matrix")
    try:
        np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise ValueError(f"{name} is not positive definite") from None
    A.setflags(write=False)
    return A


@dataclass(frozen=True, eq=False)
class ControllerGains:
    Lambda_s: np.ndarray
    Lambda_theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Lambda_s", _check_pd("Lambda_s", self.Lambda_s))
        object.__setattr__(self, "Lambda_theta", _check_pd("Lambda_theta", self.Lambda_theta))

    @classmethod
    def scalar(cls, d: int, r: int, k_s: float, k_theta: float) -> ControllerGains:
        return cls(k_s * np.eye(d), k_theta * np.eye(r))


def auxiliary_signals(i: int, q_all, qdot_all, eta_hat_i, eta_hat_dot_i,
                      g: GraphTopology, b: BearingSet, F):
    """(zeta_i, zeta_i', s_i) from agent i's own data and its neighbors.

    ``q_all`` and ``qdot_all`` are (n, d) arrays indexed by agent - 1.
    """
    q_all = np.asarray(q_all, dtype=float)
    qdot_all = np.asarray(qdot_all, dtype=float)
    F = np.asarray(F, dtype=float)
    pos = np.zeros(b.d)
    vel = np.zeros(b.d)
    for j in g.neighbors(i):
        P = projector(b.get(i, j))
        pos += P @ (q_all[i - 1] - q_all[j - 1])
        vel += P @ (qdot_all[i - 1] - qdot_all[j - 1])
    zeta = F @ eta_hat_i - pos
    zetadot = F @ eta_hat_dot_i - vel
    return zeta, zetadot, qdot_all[i - 1] - zeta


def sliding_variable_compact(B: BearingLaplacian, q_l, q_f, qdot_f, v_hat_f) -> np.ndarray:
    """s_f = q_f' - v_hat_f + B_fl q_l + B_ff q_f (stacked)."""
    return (np.ravel(qdot_f) - np.ravel(v_hat_f)
            + B.fl @ np.ravel(q_l) + B.ff @ np.ravel(q_f))


def control_torque(model: ELModel, q, qdot, zeta, zetadot, s, theta_hat,
                   gains: ControllerGains) -> np.ndarray:
    Y = model.regressor(q, qdot, zeta, zetadot)
    return (np.einsum("...ij,...j->...i", Y, theta_hat)
            - np.einsum("ij,...j->...i", gains.Lambda_s, s))


def adaptation_rhs(model: ELModel, q, qdot, zeta, zetadot, s, gains: ControllerGains) -> np.ndarray:
    Y = model.regressor(q, qdot, zeta, zetadot)
    return -np.einsum("ij,...kj,...k->...i", gains.Lambda_theta, Y, s)
