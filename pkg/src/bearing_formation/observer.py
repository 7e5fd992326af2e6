"""Distributed observer estimating the exosystem state at every follower.

Each follower i runs

    eta_hat_i' = S eta_hat_i - gamma * L * sum_{j in N_i} (v_hat_i - v_hat_j),

with v_hat_j = F eta_hat_j for followers and v_hat_j = v_c for leaders, and
L = P F^T from the filter Riccati equation.  Only the d-dimensional velocity
estimates travel over the graph.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import GainTooSmall, GraphError
from .graph import GraphTopology, followers_reachable_from_leaders, laplacian_blocks
from .leader import LeaderModel
from .matrix_equations import is_hurwitz, solve_riccati


@dataclass(frozen=True, eq=False)
class ObserverConfig:
    gamma: float
    P: np.ndarray
    L: np.ndarray
    lambda_min_Lff: float
    condition_ok: bool
    hurwitz: bool

    @property
    def margin(self) -> float:
        """2 * lambda_min(L_ff) * gamma; the observer is certified when this exceeds 1."""
        return 2.0 * self.lambda_min_Lff * self.gamma


def synthesize_observer(g: GraphTopology, m: LeaderModel, gamma: float) -> ObserverConfig:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not followers_reachable_from_leaders(g):
        raise GraphError("some follower has no path to a leader")
    ric = solve_riccati(m.S, m.F)
    L = ric.P @ m.F.T
    Lff = laplacian_blocks(g)[3].astype(float)
    lam = float(np.linalg.eigvalsh(Lff)[0])
    ok = 2.0 * lam * gamma > 1.0
    cfg = ObserverConfig(float(gamma), ric.P, L, lam, ok, False)
    hurwitz = is_hurwitz(observer_error_dynamics_matrix(cfg, g, m))
    cfg = ObserverConfig(float(gamma), ric.P, L, lam, ok, hurwitz)
    if not ok:
        warnings.warn(GainTooSmall(
            f"2*lambda_min(L_ff)*gamma = {cfg.margin:.4g} <= 1; convergence not certified"))
    return cfg


def observer_rhs(cfg: ObserverConfig, g: GraphTopology, m: LeaderModel, eta_hat_f, eta) -> np.ndarray:
    """Neighbor-sum form, one follower at a time.  Returns the stacked derivative."""
    eta_hat = np.asarray(eta_hat_f, dtype=float).reshape(g.n_followers, m.w)
    v_c = m.F @ np.asarray(eta, dtype=float)
    k = g.n_leaders

    def v_hat(j):
        return v_c if g.is_leader(j) else m.F @ eta_hat[j - k - 1]

    out = np.empty_like(eta_hat)
    for row, i in enumerate(g.followers):
        vi = v_hat(i)
        coupling = sum((vi - v_hat(j) for j in g.neighbors(i)), np.zeros(m.d))
        out[row] = m.S @ eta_hat[row] - cfg.gamma * cfg.L @ coupling
    return out.ravel()


def observer_rhs_compact(cfg: ObserverConfig, g: GraphTopology, m: LeaderModel, eta_hat_f, eta) -> np.ndarray:
    """Kronecker form (I (x) S) eta_hat - gamma (L_fl (x) LF)(1 (x) eta) - gamma (L_ff (x) LF) eta_hat."""
    _, _, Lfl, Lff = laplacian_blocks(g)
    LF = cfg.L @ m.F
    eta_hat_f = np.asarray(eta_hat_f, dtype=float).ravel()
    leader_stack = np.tile(np.asarray(eta, dtype=float), g.n_leaders)
    return (np.kron(np.eye(g.n_followers), m.S) @ eta_hat_f
            - cfg.gamma * np.kron(Lfl, LF) @ leader_stack
            - cfg.gamma * np.kron(Lff, LF) @ eta_hat_f)


def observer_error_dynamics_matrix(cfg: ObserverConfig, g: GraphTopology, m: LeaderModel) -> np.ndarray:
    """S_f = (I (x) S) - gamma (L_ff (x) L F)."""
    Lff = laplacian_blocks(g)[3]
    return np.kron(np.eye(g.n_followers), m.S) - cfg.gamma * np.kron(Lff, cfg.L @ m.F)


def modal_hurwitz(cfg: ObserverConfig, g: GraphTopology, m: LeaderModel) -> bool:
    """Mode-by-mode check: S - gamma * lambda_k(L_ff) * L F Hurwitz for every k.

    Equivalent to the global S_f check because L_ff is symmetric and
    diagonalizes the Kronecker structure.
    """
    lams = np.linalg.eigvalsh(laplacian_blocks(g)[3].astype(float))
    LF = cfg.L @ m.F
    return all(is_hurwitz(m.S - cfg.gamma * lam * LF) for lam in lams)
