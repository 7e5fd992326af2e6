"""Initial-condition collision-avoidance certificate and run-time distance monitor.

The certificate bounds how far any agent can stray from its target:

    D_sf  = sqrt((s_f' M_f s_f + theta_tilde' Lambda_theta^-1 theta_tilde) / m_lower)
    D_vf  = |F|_2 sqrt(eta_tilde' P_f eta_tilde / lambda_min(P_f))
    D_bar = D_sf + D_vf

and guarantees |q_i(t) - q_j(t)| >= gamma for all t whenever

    inf_{t, i != j} |q_i* - q_j*|  >=  sqrt(n) (|q_tilde_f(0)| + D_bar / lambda_min(B_ff)) + gamma.

P_f solves S_f' P_f + P_f S_f = -I (Q = I fixed for determinism).  The
condition is sufficient, not necessary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from .bearings import certify_localizability
from .errors import CertificatePrereqFailure
from .leader import leader_flow
from .simulation import ClosedLoopState, ClosedLoopSystem, TrajectoryLog, error_views

INVARIANCE_RTOL = 1e-9


@dataclass(frozen=True)
class SafetyCertificate:
    gamma_safe: float
    D_sf: float
    D_vf: float
    D_bar: float
    lambda_min_Bff: float
    lambda_min_Pf: float
    F_norm: float
    q_tilde_norm: float
    inf_target_distance: float
    lhs: float
    rhs: float
    holds: bool
    lyapunov_Q: str = "identity"

    def lines(self) -> list[str]:
        out = []
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            out.append(f"{name} = {v:.17g}" if isinstance(v, float) else f"{name} = {v}")
        return out


def _pair_min(q_all: np.ndarray) -> float:
    return float(pdist(q_all).min()) if q_all.shape[0] > 1 else math.inf


def inf_target_distance(system: ClosedLoopSystem, horizon: float = 30.0, stride: float = 1.0) -> float:
    """Smallest pairwise distance of the target formation over [0, horizon].

    Targets translate rigidly with the common leader velocity, so the distance
    is constant in time; sampling the horizon asserts that invariance.
    """
    d = system.d
    out = []
    for t in np.arange(0.0, horizon + 0.5 * stride, stride):
        _, q_l = leader_flow(system.leader, float(t))
        q_all = np.vstack([q_l.reshape(-1, d), system.targets(q_l).reshape(-1, d)])
        out.append(_pair_min(q_all))
    out = np.array(out)
    if np.isfinite(out[0]) and np.ptp(out) > INVARIANCE_RTOL * max(1.0, out[0]):
        raise AssertionError(f"target distances vary over time (spread {np.ptp(out):.3e})")
    return float(out.min())


def certificate(system: ClosedLoopSystem, init: ClosedLoopState, gamma_safe: float,
                horizon: float = 30.0) -> SafetyCertificate:
    if not certify_localizability(system.B).localizable:
        raise CertificatePrereqFailure("localizability", f"lambda_min(B_ff) = {system.B.lambda_min_ff:.3e}")
    P_f = system.P_f
    if P_f is None:
        raise CertificatePrereqFailure("observer", "S_f is not Hurwitz")
    if not system.m_lower > 0:
        raise CertificatePrereqFailure("inertia lower bound", f"m_lower = {system.m_lower}")

    v = error_views(init, system)
    lay = system.layout
    q = init.x[lay.q].reshape(lay.n_f, lay.d)
    s = v.s_f.reshape(lay.n_f, lay.d)
    kinetic = sum(float(np.einsum("ki,kij,kj->", s[idx], m.inertia(q[idx]), s[idx]))
                  for m, idx in system.groups)
    adapt = v.V1 - kinetic
    D_sf = math.sqrt(max(kinetic + adapt, 0.0) / system.m_lower)
    lam_P = float(np.linalg.eigvalsh(P_f)[0])
    F_norm = float(np.linalg.norm(system.leader.F, 2))
    D_vf = F_norm * math.sqrt(max(float(v.eta_tilde_f @ P_f @ v.eta_tilde_f), 0.0) / lam_P)
    D_bar = D_sf + D_vf
    lam_B = system.B.lambda_min_ff
    qt = float(np.linalg.norm(v.q_tilde_f))
    lhs = inf_target_distance(system, horizon)
    rhs = math.sqrt(system.graph.n) * (qt + D_bar / lam_B) + gamma_safe
    return SafetyCertificate(float(gamma_safe), D_sf, D_vf, D_bar, lam_B, lam_P, F_norm, qt,
                             lhs, lhs, rhs, bool(lhs >= rhs))


@dataclass(frozen=True)
class DistanceReport:
    min_distance: float
    min_distance_time: float | None
    first_violation_time: float | None

    @property
    def ok(self) -> bool:
        return self.first_violation_time is None


def runtime_distance_monitor(log: TrajectoryLog, gamma: float) -> DistanceReport:
    """Minimum realized pairwise distance over the logged samples, and the first time below gamma."""
    if len(log) == 0:
        raise ValueError("empty trajectory log")
    dists = np.array([_pair_min(q) for q in log.q])
    if not np.isfinite(dists).any():
        return DistanceReport(math.inf, None, None)
    k = int(np.argmin(dists))
    below = np.flatnonzero(dists < gamma)
    first = float(log.t[below[0]]) if below.size else None
    return DistanceReport(float(dists[k]), float(log.t[k]), first)
