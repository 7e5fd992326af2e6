"""Fixed-step RK4 integration of the coupled leader/observer/plant/controller loop.

State layout (the flat vector integrated by RK4, also the CSV offset map):

    x = [ q_f (d n_f) | qdot_f (d n_f) | eta_hat_f (w n_f) | theta_hat_f (sum r_i) ]

Followers are stacked in index order n_l+1..n.  The exosystem state eta and
leader positions q_l are not integrated: they are evaluated in closed form at
every stage time, so leader truncation error never enters the follower loop.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import pdist

from .bearings import BearingLaplacian, BearingSet, bearing_laplacian, certify_localizability
from .controller import ControllerGains
from .el_agents import ELModel, forward_dynamics
from .errors import CertificateFailure, NotHurwitz, NumericalBlowup
from .graph import GraphTopology, followers_reachable_from_leaders, laplacian_blocks
from .leader import LeaderModel, leader_flow
from .matrix_equations import solve_lyapunov
from .observer import ObserverConfig, observer_error_dynamics_matrix

BLOWUP_LIMIT = 1e12
MONOTONE_SLACK = 1e-7


@dataclass(frozen=True)
class StateLayout:
    d: int
    w: int
    n_f: int
    r: tuple[int, ...]

    @property
    def q(self) -> slice:
        return slice(0, self.d * self.n_f)

    @property
    def qdot(self) -> slice:
        k = self.d * self.n_f
        return slice(k, 2 * k)

    @property
    def eta_hat(self) -> slice:
        k = 2 * self.d * self.n_f
        return slice(k, k + self.w * self.n_f)

    @property
    def theta_hat(self) -> slice:
        k = (2 * self.d + self.w) * self.n_f
        return slice(k, k + sum(self.r))

    @property
    def size(self) -> int:
        return self.theta_hat.stop

    @cached_property
    def theta_offsets(self) -> tuple[int, ...]:
        return tuple(int(o) for o in np.concatenate([[0], np.cumsum(self.r)]))

    def component(self, k: int) -> str:
        """Human-readable name of flat index k, used in blowup reports."""
        for name in ("q", "qdot", "eta_hat", "theta_hat"):
            sl = getattr(self, name)
            if sl.start <= k < sl.stop:
                return f"{name}_f[{k - sl.start}]"
        raise IndexError(k)


def _as_index(idx: list[int]):
    """A slice when the followers are contiguous (cheap views), else an index array."""
    if idx == list(range(idx[0], idx[-1] + 1)):
        return slice(idx[0], idx[-1] + 1)
    return np.array(idx)


@dataclass(frozen=True, eq=False)
class ClosedLoopSystem:
    """Everything the vector field needs, fixed at scenario load.

    ``models`` and ``gains`` hold one entry per follower, so heterogeneous
    teams are allowed; followers that share a model object are evaluated as
    one batch.
    """

    graph: GraphTopology
    bearings: BearingSet
    leader: LeaderModel
    observer: ObserverConfig
    models: tuple[ELModel, ...]
    gains: tuple[ControllerGains, ...]

    def __post_init__(self):
        g = self.graph
        if len(self.models) != g.n_followers or len(self.gains) != g.n_followers:
            raise ValueError("need one model and one gain set per follower")
        if self.leader.d != self.bearings.d or self.leader.n_leaders != g.n_leaders:
            raise ValueError("leader model dimensions disagree with the graph and bearings")
        for m, k in zip(self.models, self.gains):
            if m.d != self.d or k.Lambda_s.shape != (m.d, m.d) or k.Lambda_theta.shape != (m.r, m.r):
                raise ValueError("model and gain dimensions disagree")

    @property
    def d(self) -> int:
        return self.bearings.d

    @cached_property
    def layout(self) -> StateLayout:
        return StateLayout(self.d, self.leader.w, self.graph.n_followers,
                           tuple(m.r for m in self.models))

    @cached_property
    def B(self) -> BearingLaplacian:
        return bearing_laplacian(self.graph, self.bearings)

    @cached_property
    def _Bff_chol(self):
        return cho_factor(self.B.ff)

    @cached_property
    def _lap(self):
        _, _, Lfl, Lff = laplacian_blocks(self.graph)
        return Lfl.astype(float), Lff.astype(float)

    @cached_property
    def groups(self) -> tuple[tuple[ELModel, slice | np.ndarray], ...]:
        out: dict[int, tuple[ELModel, list[int]]] = {}
        for k, m in enumerate(self.models):
            out.setdefault(id(m), (m, []))[1].append(k)
        return tuple((m, _as_index(idx)) for m, idx in out.values())

    @cached_property
    def _group_index(self):
        """Per model group: theta_hat index array (k, r), stacked Lambda_theta and Lambda_s."""
        offs = self.layout.theta_offsets
        out = []
        for m, idx in self.groups:
            ks = np.arange(len(self.models))[idx]
            th_idx = np.array([np.arange(offs[k], offs[k] + m.r) for k in ks])
            Lt = np.stack([self.gains[k].Lambda_theta for k in ks])
            out.append((m, idx, th_idx, Lt, self.Lambda_s[idx]))
        return tuple(out)

    @cached_property
    def _Bfl_common(self) -> np.ndarray:
        """B_fl (1 x I_d): maps a velocity shared by all leaders into follower space."""
        n_l, d = self.graph.n_leaders, self.d
        return self.B.fl.reshape(-1, n_l, d).sum(axis=1)

    @cached_property
    def Lambda_s(self) -> np.ndarray:
        return np.stack([k.Lambda_s for k in self.gains])

    @cached_property
    def theta_true(self) -> np.ndarray:
        return np.concatenate([m.theta for m in self.models])

    @cached_property
    def Lambda_theta_inv(self) -> np.ndarray:
        return np.concatenate([np.linalg.inv(k.Lambda_theta).ravel() for k in self.gains])

    @cached_property
    def m_lower(self) -> float:
        return min(m.m_lower for m in self.models)

    @cached_property
    def S_f(self) -> np.ndarray:
        return observer_error_dynamics_matrix(self.observer, self.graph, self.leader)

    @cached_property
    def P_f(self) -> np.ndarray | None:
        """Solution of S_f^T P_f + P_f S_f = -I, or None when S_f is not Hurwitz."""
        try:
            return solve_lyapunov(self.S_f, np.eye(self.S_f.shape[0]))
        except NotHurwitz:
            return None

    def certificate_failures(self) -> list[str]:
        """Names of the load-time checks that fail (empty when all pass)."""
        failed = []
        if not followers_reachable_from_leaders(self.graph):
            failed.append("reachability")
        if not certify_localizability(self.B).localizable:
            failed.append("localizability")
        if not self.leader.is_detectable():
            failed.append("detectability")
        if not self.observer.condition_ok:
            failed.append("gain_condition")
        return failed

    def targets(self, q_l) -> np.ndarray:
        """Stacked follower targets q_f* = -B_ff^-1 B_fl q_l."""
        return cho_solve(self._Bff_chol, -self.B.fl @ np.ravel(q_l))


@dataclass(frozen=True, eq=False)
class ClosedLoopState:
    t: float
    x: np.ndarray
    eta: np.ndarray
    q_l: np.ndarray

    def part(self, layout: StateLayout, name: str) -> np.ndarray:
        return self.x[getattr(layout, name)]


def initial_state(system: ClosedLoopSystem, q_f, qdot_f, eta_hat_f, theta_hat_f, t0: float = 0.0
                  ) -> ClosedLoopState:
    x = np.concatenate([np.ravel(q_f), np.ravel(qdot_f), np.ravel(eta_hat_f), np.ravel(theta_hat_f)])
    if x.size != system.layout.size:
        raise ValueError(f"state has {x.size} entries, layout expects {system.layout.size}")
    eta, q_l = leader_flow(system.leader, t0)
    return ClosedLoopState(float(t0), x.astype(float), eta, q_l)


@dataclass
class _Aux:
    s: np.ndarray      # (n_f, d)
    tau: np.ndarray    # (n_f, d)


def _observer_field(system: ClosedLoopSystem, eh, v_c):
    """Observer derivative for followers' estimates eh of shape (n_f, w)."""
    Lfl, Lff = system._lap
    lm = system.leader
    coupling = Lff @ (eh @ lm.F.T) + Lfl.sum(axis=1)[:, None] * v_c
    return eh @ lm.S.T - system.observer.gamma * coupling @ system.observer.L.T


def _vector_field(system: ClosedLoopSystem, x, eta, q_l):
    """dx/dt plus the sliding variable and torques at this stage."""
    lay = system.layout
    lm = system.leader
    nf, d, w = lay.n_f, lay.d, lay.w
    q = x[lay.q].reshape(nf, d)
    qd = x[lay.qdot].reshape(nf, d)
    eh = x[lay.eta_hat].reshape(nf, w)
    th = x[lay.theta_hat]
    B = system.B

    v_c = lm.F @ eta
    vh = eh @ lm.F.T
    ehd = _observer_field(system, eh, v_c)

    pos = (B.fl @ q_l + B.ff @ x[lay.q]).reshape(nf, d)
    vel = (system._Bfl_common @ v_c + B.ff @ x[lay.qdot]).reshape(nf, d)
    zeta = vh - pos
    zetad = ehd @ lm.F.T - vel
    s = qd - zeta

    qdd = np.empty_like(q)
    tau = np.empty_like(q)
    thd = np.empty_like(th)
    for model, idx, th_idx, Lt, Ls in system._group_index:
        Y = model.regressor(q[idx], qd[idx], zeta[idx], zetad[idx])
        s_g = s[idx][..., None]
        tau_g = (Y @ th[th_idx][..., None] - Ls @ s_g)[..., 0]
        tau[idx] = tau_g
        qdd[idx] = forward_dynamics(model, q[idx], qd[idx], tau_g)
        thd[th_idx] = -(Lt @ (np.swapaxes(Y, -1, -2) @ s_g))[..., 0]

    dx = np.concatenate([qd.ravel(), qdd.ravel(), ehd.ravel(), thd])
    return dx, _Aux(s, tau)


def observer_trajectory(system: ClosedLoopSystem, eta_hat0, T: float, dt: float, t0: float = 0.0):
    """RK4 on the observer subsystem alone, leaders in closed form.

    The observer does not depend on the plant, so this reproduces the eta_hat
    part of a full run.  Returns (times, eta_hat history of shape (k, n_f w)).
    """
    n_steps = int(round(T / dt))
    lay = system.layout
    eh = np.asarray(eta_hat0, dtype=float).reshape(lay.n_f, lay.w)
    F = system.leader.F
    times = t0 + dt * np.arange(n_steps + 1)
    out = np.empty((n_steps + 1, eh.size))
    out[0] = eh.ravel()
    eta = leader_flow(system.leader, t0)[0]
    for k in range(n_steps):
        t = times[k]
        eta_m = leader_flow(system.leader, t + 0.5 * dt)[0]
        eta_e = leader_flow(system.leader, t + dt)[0]
        k1 = _observer_field(system, eh, F @ eta)
        k2 = _observer_field(system, eh + 0.5 * dt * k1, F @ eta_m)
        k3 = _observer_field(system, eh + 0.5 * dt * k2, F @ eta_m)
        k4 = _observer_field(system, eh + dt * k3, F @ eta_e)
        eh = eh + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        eta = eta_e
        out[k + 1] = eh.ravel()
    return times, out


def vector_field(system: ClosedLoopSystem, state: ClosedLoopState) -> np.ndarray:
    return _vector_field(system, state.x, state.eta, state.q_l)[0]


def _check_finite(system: ClosedLoopSystem, t: float, x: np.ndarray):
    bad = ~np.isfinite(x) | (np.abs(x) > BLOWUP_LIMIT)
    if bad.any():
        k = int(np.argmax(bad))
        raise NumericalBlowup(t, system.layout.component(k), float(x[k]))


def _rk4(system, state: ClosedLoopState, dt: float, k1=None):
    t, x = state.t, state.x
    eta_m, ql_m = leader_flow(system.leader, t + 0.5 * dt)
    eta_e, ql_e = leader_flow(system.leader, t + dt)
    if k1 is None:
        k1 = _vector_field(system, x, state.eta, state.q_l)[0]
    k2 = _vector_field(system, x + 0.5 * dt * k1, eta_m, ql_m)[0]
    k3 = _vector_field(system, x + 0.5 * dt * k2, eta_m, ql_m)[0]
    k4 = _vector_field(system, x + dt * k3, eta_e, ql_e)[0]
    x_new = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(system, t + dt, x_new)
    return ClosedLoopState(t + dt, x_new, eta_e, ql_e)


def step(state: ClosedLoopState, dt: float, system: ClosedLoopSystem) -> ClosedLoopState:
    """One classical RK4 step; leaders by closed form at the stage times."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    return _rk4(system, state, dt)


@dataclass(frozen=True)
class ErrorViews:
    q_tilde_f: np.ndarray
    s_f: np.ndarray
    eta_tilde_f: np.ndarray
    theta_tilde_f: np.ndarray
    v_tilde_f: np.ndarray
    d_f: np.ndarray
    V1: float
    V2: float


def _views(system: ClosedLoopSystem, state: ClosedLoopState, s_f) -> ErrorViews:
    lay = system.layout
    x = state.x
    q_tilde = x[lay.q] - system.targets(state.q_l)
    eta_tilde = x[lay.eta_hat] - np.tile(state.eta, lay.n_f)
    theta_tilde = x[lay.theta_hat] - system.theta_true
    v_tilde = (eta_tilde.reshape(lay.n_f, lay.w) @ system.leader.F.T).ravel()
    s_f = np.ravel(s_f)
    q = x[lay.q].reshape(lay.n_f, lay.d)
    sq = s_f.reshape(lay.n_f, lay.d)
    kinetic = 0.0
    for model, idx in system.groups:
        kinetic += float(np.einsum("ki,kij,kj->", sq[idx], model.inertia(q[idx]), sq[idx]))
    V1 = kinetic + float(theta_tilde @ _apply_block_inv(system, theta_tilde))
    P_f = system.P_f
    V2 = float(eta_tilde @ P_f @ eta_tilde) if P_f is not None else math.nan
    return ErrorViews(q_tilde, s_f, eta_tilde, theta_tilde, v_tilde, s_f + v_tilde, V1, V2)


def _apply_block_inv(system: ClosedLoopSystem, v):
    out = np.empty_like(v)
    offs = system.layout.theta_offsets
    flat = system.Lambda_theta_inv
    pos = 0
    for k, r in enumerate(system.layout.r):
        blk = flat[pos: pos + r * r].reshape(r, r)
        out[offs[k]: offs[k + 1]] = blk @ v[offs[k]: offs[k + 1]]
        pos += r * r
    return out


def error_views(state: ClosedLoopState, system: ClosedLoopSystem) -> ErrorViews:
    """Error quantities: q_tilde_f, s_f, eta_tilde_f, theta_tilde_f, v_tilde_f, d_f, V1, V2.

    Uses ground-truth theta and eta, which only the simulator has.
    """
    _, aux = _vector_field(system, state.x, state.eta, state.q_l)
    return _views(system, state, aux.s)


def formation_error_residual(state: ClosedLoopState, system: ClosedLoopSystem, h: float = 1e-3) -> float:
    """|q_tilde_f' - (-B_ff q_tilde_f + d_f)| with q_tilde_f' by central differences.

    A structural check on the error dynamics; q_f is advanced by one RK4 step
    of size h in each direction.
    """
    fwd = step(state, h, system)
    bwd = _rk4(system, state, -h)
    sl = system.layout.q
    qt_dot = ((fwd.x[sl] - system.targets(fwd.q_l))
              - (bwd.x[sl] - system.targets(bwd.q_l))) / (2 * h)
    v = error_views(state, system)
    return float(np.linalg.norm(qt_dot - (-system.B.ff @ v.q_tilde_f + v.d_f)))


@dataclass
class TrajectoryLog:
    """Samples at a fixed stride.  Positions and velocities include leaders."""

    t: np.ndarray
    q: np.ndarray            # (k, n, d)
    qdot: np.ndarray         # (k, n, d)
    s_f: np.ndarray          # (k, d n_f)
    q_tilde_norm: np.ndarray
    eta_tilde_norm: np.ndarray
    theta_tilde_norm: np.ndarray
    V1: np.ndarray
    V2: np.ndarray
    min_dist: np.ndarray
    tau: np.ndarray          # (k, d n_f)
    v_tilde_norm: np.ndarray
    eta_tilde: np.ndarray    # (k, w n_f)

    def __len__(self):
        return self.t.size


@dataclass
class SummaryReport:
    T: float
    dt: float
    steps: int
    q_tilde_norm: float
    s_norm: float
    eta_tilde_norm: float
    theta_tilde_norm: float
    min_distance: float
    min_distance_time: float
    V1_violations: int
    V2_violations: int
    max_s_norm: float
    max_v_tilde_norm: float
    forced: bool = False
    failed_checks: list[str] = field(default_factory=list)

    def lines(self) -> list[str]:
        out = []
        for name in self.__dataclass_fields__:
            v = getattr(self, name)
            if isinstance(v, float):
                v = f"{v:.17g}"
            elif isinstance(v, list):
                v = ",".join(v) if v else "none"
            out.append(f"{name} = {v}")
        return out


def _min_distance(q_all: np.ndarray) -> float:
    if q_all.shape[0] < 2:
        return math.inf
    return float(pdist(q_all).min())


def _positions(system: ClosedLoopSystem, state: ClosedLoopState):
    lay = system.layout
    d = lay.d
    v_c = system.leader.F @ state.eta
    q_all = np.vstack([state.q_l.reshape(-1, d), state.x[lay.q].reshape(-1, d)])
    qd_all = np.vstack([np.tile(v_c, (system.graph.n_leaders, 1)), state.x[lay.qdot].reshape(-1, d)])
    return q_all, qd_all


def run(system: ClosedLoopSystem, init: ClosedLoopState, T: float, dt: float = 1e-3,
        log_stride: int = 10, forced: bool = False):
    """Integrate over [init.t, init.t + T] and return (TrajectoryLog, SummaryReport).

    V1/V2 monotonicity and the minimum inter-agent distance are checked at
    every integration step, not only at logged samples.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not T > 0:
        raise ValueError("horizon must be positive")
    if log_stride < 1:
        raise ValueError("log stride must be at least 1")
    failed = system.certificate_failures()
    if failed and not forced:
        raise CertificateFailure(failed)
    _check_finite(system, init.t, init.x)

    n_steps = int(round(T / dt))
    n_log = n_steps // log_stride + 1 + (1 if n_steps % log_stride else 0)
    lay = system.layout
    n, d = system.graph.n, lay.d
    log = TrajectoryLog(
        t=np.empty(n_log), q=np.empty((n_log, n, d)), qdot=np.empty((n_log, n, d)),
        s_f=np.empty((n_log, d * lay.n_f)), q_tilde_norm=np.empty(n_log),
        eta_tilde_norm=np.empty(n_log), theta_tilde_norm=np.empty(n_log), V1=np.empty(n_log),
        V2=np.empty(n_log), min_dist=np.empty(n_log), tau=np.empty((n_log, d * lay.n_f)),
        v_tilde_norm=np.empty(n_log), eta_tilde=np.empty((n_log, lay.w * lay.n_f)))

    state = init
    slack = MONOTONE_SLACK * dt
    v1_bad = v2_bad = 0
    prev_V1 = prev_V2 = None
    min_d, min_d_t = math.inf, init.t
    max_s = max_vt = 0.0
    row = 0
    for k in range(n_steps + 1):
        k1, aux = _vector_field(system, state.x, state.eta, state.q_l)
        views = _views(system, state, aux.s)
        q_all, qd_all = _positions(system, state)
        dist = _min_distance(q_all)
        if dist < min_d:
            min_d, min_d_t = dist, state.t
        max_s = max(max_s, float(np.linalg.norm(views.s_f)))
        max_vt = max(max_vt, float(np.linalg.norm(views.v_tilde_f)))
        if prev_V1 is not None:
            v1_bad += views.V1 > prev_V1 + slack
            v2_bad += views.V2 > prev_V2 + slack
        prev_V1, prev_V2 = views.V1, views.V2
        if k % log_stride == 0 or k == n_steps:
            log.t[row] = state.t
            log.q[row], log.qdot[row] = q_all, qd_all
            log.s_f[row] = views.s_f
            log.q_tilde_norm[row] = np.linalg.norm(views.q_tilde_f)
            log.eta_tilde_norm[row] = np.linalg.norm(views.eta_tilde_f)
            log.theta_tilde_norm[row] = np.linalg.norm(views.theta_tilde_f)
            log.V1[row], log.V2[row] = views.V1, views.V2
            log.min_dist[row] = dist
            log.tau[row] = aux.tau.ravel()
            log.v_tilde_norm[row] = np.linalg.norm(views.v_tilde_f)
            log.eta_tilde[row] = views.eta_tilde_f
            row += 1
        if k == n_steps:
            break
        state = _rk4(system, state, dt, k1)

    summary = SummaryReport(
        T=float(T), dt=float(dt), steps=n_steps,
        q_tilde_norm=float(log.q_tilde_norm[-1]), s_norm=float(np.linalg.norm(log.s_f[-1])),
        eta_tilde_norm=float(log.eta_tilde_norm[-1]), theta_tilde_norm=float(log.theta_tilde_norm[-1]),
        min_distance=min_d, min_distance_time=float(min_d_t),
        V1_violations=int(v1_bad), V2_violations=int(v2_bad),
        max_s_norm=max_s, max_v_tilde_norm=max_vt, forced=forced, failed_checks=failed)
    return log, summary
