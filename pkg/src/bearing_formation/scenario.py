"""Scenario files: TOML with named tables mirroring the Scenario fields.

Grammar (all tables required unless marked optional):

    name = "..."                       optional label
    seed = 7                           drives every random draw

    [graph]       n, n_leaders, edges = [[i, j], ...]      agents are 1-based, leaders first
    [[bearing]]   i, j, g = [gx, gy, ...]                   unit vector from j toward i, one per edge
    [leader]      S = [[...]], F = [[...]], eta0 = [...], q_l0 = [[x, y], ...] (one row per leader)
    [model]       kind = "planar_2dof", params = {...}      optional params override defaults
    [[model.override]]  follower = k, kind = "...", params = {...}     optional, per follower
    [gains]       gamma (optional), Lambda_s, Lambda_theta  scalar (times identity) or matrix
    [integration] T, dt, log_stride
    [safety]      gamma_safe
    [initial]     mode = "random":   q_tilde, s, eta_tilde, theta_tilde scales
                  mode = "explicit": q_f, qdot_f, eta_hat_f, theta_hat_f vectors

Random initial conditions are centered uniform draws, (U(0,1) - 0.5) * scale,
taken in the order eta_tilde, s_f, theta_tilde, q_tilde from a Philox
generator keyed by ``seed``.  Velocities are set so that s_f(0) equals the
drawn value.
"""

from __future__ import annotations

import copy
import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import tomli
import tomli_w

from .bearings import BearingSet
from .controller import ControllerGains
from .el_agents import MODELS, PlanarTwoDOF
from .errors import NonUnitBearing, ParseError
from .graph import GraphTopology, laplacian_blocks
from .leader import LeaderModel
from .observer import synthesize_observer
from .simulation import ClosedLoopState, ClosedLoopSystem, initial_state

MODEL_KINDS = {"planar_2dof": PlanarTwoDOF}
RANDOM_KEYS = ("eta_tilde", "s", "theta_tilde", "q_tilde")
EXPLICIT_KEYS = ("q_f", "qdot_f", "eta_hat_f", "theta_hat_f")


def default_gamma(g: GraphTopology) -> float:
    """Fallback observer gain 1.1 / lambda_min(L_ff), so that 2 lambda_min(L_ff) gamma = 2.2."""
    lam = float(np.linalg.eigvalsh(laplacian_blocks(g)[3].astype(float))[0])
    return 2.0 * 1.1 / (2.0 * lam)


def _line_of(text: str | None, key: str) -> int | None:
    if not text:
        return None
    pat = re.compile(rf"^\s*(\[+\s*)?{re.escape(key)}\b")
    for k, line in enumerate(text.splitlines(), 1):
        if pat.match(line):
            return k
    return None


def _gain_matrix(v, size: int) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim == 0:
        return float(a) * np.eye(size)
    return a


@dataclass(eq=False)
class Scenario:
    """Validated scenario.  ``raw`` is the canonical dict that round-trips to TOML."""

    raw: dict[str, Any]
    graph: GraphTopology
    bearings: BearingSet
    leader: LeaderModel
    models: tuple
    gains: tuple
    gamma: float
    T: float
    dt: float
    log_stride: int
    gamma_safe: float
    seed: int
    source: str | None = field(default=None, repr=False)

    # construction

    @classmethod
    def from_dict(cls, data: dict[str, Any], text: str | None = None) -> Scenario:
        raw = copy.deepcopy(data)

        def fail(msg, fld):
            raise ParseError(msg, field=fld, line=_line_of(text, fld.split(".")[-1]))

        def need(table, key, where):
            if not isinstance(table, dict) or key not in table:
                fail("missing required entry", f"{where}.{key}" if where else key)
            return table[key]

        try:
            graph_t = need(raw, "graph", "")
            try:
                graph = GraphTopology(int(need(graph_t, "n", "graph")),
                                      int(need(graph_t, "n_leaders", "graph")),
                                      [tuple(e) for e in need(graph_t, "edges", "graph")])
            except (TypeError, ValueError) as e:
                fail(str(e), "graph.edges")

            entries = {}
            for k, b in enumerate(need(raw, "bearing", "")):
                key = (int(need(b, "i", f"bearing[{k}]")), int(need(b, "j", f"bearing[{k}]")))
                entries[key] = need(b, "g", f"bearing[{k}]")
            try:
                d = len(next(iter(entries.values())))
                bearings = BearingSet(d, entries)
            except NonUnitBearing as e:
                fail(str(e), "bearing.g")
            except (StopIteration, ValueError, TypeError) as e:
                fail(f"bad bearing list: {e}", "bearing")
            for i, j in graph.edges:
                if (i, j) not in bearings.entries and (j, i) not in bearings.entries:
                    fail(f"edge ({i}, {j}) has no bearing", "bearing")
            for i, j in bearings.entries:
                if (min(i, j), max(i, j)) not in graph.edges:
                    fail(f"bearing ({i}, {j}) is not an edge of the graph", "bearing")

            lt = need(raw, "leader", "")
            q_l0 = np.asarray(need(lt, "q_l0", "leader"), dtype=float)
            if q_l0.shape != (graph.n_leaders, d):
                fail(f"expected {graph.n_leaders} rows of length {d}", "leader.q_l0")
            try:
                leader = LeaderModel(need(lt, "S", "leader"), need(lt, "F", "leader"),
                                     need(lt, "eta0", "leader"), q_l0.ravel())
            except ValueError as e:
                fail(str(e), "leader.S")
            if leader.d != d:
                fail(f"F has {leader.d} rows, bearings have dimension {d}", "leader.F")

            models = cls._models(need(raw, "model", ""), graph, fail)
            for m in models:
                if m.d != d:
                    fail(f"model dimension {m.d} differs from bearing dimension {d}", "model.kind")

            gt = need(raw, "gains", "")
            gamma = float(gt["gamma"]) if "gamma" in gt else default_gamma(graph)
            if not gamma > 0:
                fail("gamma must be positive", "gains.gamma")
            try:
                gains = tuple(ControllerGains(_gain_matrix(need(gt, "Lambda_s", "gains"), m.d),
                                              _gain_matrix(need(gt, "Lambda_theta", "gains"), m.r))
                              for m in models)
            except ValueError as e:
                fail(str(e), "gains.Lambda_s")

            it = need(raw, "integration", "")
            T = float(need(it, "T", "integration"))
            dt = float(need(it, "dt", "integration"))
            stride = int(it.get("log_stride", 10))
            if not T > 0:
                fail("horizon must be positive", "integration.T")
            if not (dt > 0 and math.isfinite(dt)):
                fail("dt must be positive", "integration.dt")
            if stride < 1:
                fail("log_stride must be at least 1", "integration.log_stride")

            gamma_safe = float(need(need(raw, "safety", ""), "gamma_safe", "safety"))
            if gamma_safe < 0:
                fail("gamma_safe must be non-negative", "safety.gamma_safe")
            seed = int(need(raw, "seed", ""))
            if seed < 0:
                fail("seed must be non-negative", "seed")

            init = need(raw, "initial", "")
            mode = need(init, "mode", "initial")
            if mode == "random":
                for key in RANDOM_KEYS:
                    if float(need(init, key, "initial")) < 0:
                        fail("scale must be non-negative", f"initial.{key}")
            elif mode == "explicit":
                lay_sizes = {"q_f": d * graph.n_followers, "qdot_f": d * graph.n_followers,
                             "eta_hat_f": leader.w * graph.n_followers,
                             "theta_hat_f": sum(m.r for m in models)}
                for key, size in lay_sizes.items():
                    if np.asarray(need(init, key, "initial"), dtype=float).size != size:
                        fail(f"expected {size} entries", f"initial.{key}")
            else:
                fail(f"unknown mode {mode!r}", "initial.mode")
        except ParseError:
            raise
        except (TypeError, ValueError, KeyError, AttributeError) as e:
            raise ParseError(f"malformed scenario: {e}") from None

        return cls(raw, graph, bearings, leader, models, gains, gamma, T, dt, stride,
                   gamma_safe, seed, text)

    @staticmethod
    def _models(mt, graph: GraphTopology, fail):
        def make(spec, where):
            kind = spec.get("kind", "planar_2dof")
            if kind not in MODEL_KINDS:
                fail(f"unknown model kind {kind!r} (known: {sorted(MODELS)})", f"{where}.kind")
            try:
                return MODEL_KINDS[kind](**spec.get("params", {}))
            except TypeError as e:
                fail(str(e), f"{where}.params")

        base = make(mt, "model")
        models = [base] * graph.n_followers
        for k, ov in enumerate(mt.get("override", [])):
            i = int(ov.get("follower", -1))
            if i not in graph.followers:
                fail(f"{i} is not a follower", "model.override.follower")
            models[i - graph.n_leaders - 1] = make(ov, f"model.override[{k}]")
        return tuple(models)

    @classmethod
    def loads(cls, text: str) -> Scenario:
        try:
            data = tomli.loads(text)
        except tomli.TOMLDecodeError as e:
            m = re.search(r"line (\d+)", str(e))
            raise ParseError(str(e), line=int(m.group(1)) if m else None) from None
        return cls.from_dict(data, text)

    @classmethod
    def load(cls, path) -> Scenario:
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ParseError(f"cannot read scenario: {e}") from None
        return cls.loads(text)

    def dumps(self) -> str:
        return tomli_w.dumps(self.raw)

    def with_overrides(self, **changes) -> Scenario:
        """Copy with top-level or dotted keys replaced, e.g. {"integration.dt": 1e-4}."""
        raw = copy.deepcopy(self.raw)
        for dotted, value in changes.items():
            *path, last = dotted.split(".")
            node = raw
            for p in path:
                node = node.setdefault(p, {})
            node[last] = value
        return Scenario.from_dict(raw)

    # derived objects

    def build_system(self) -> ClosedLoopSystem:
        obs = synthesize_observer(self.graph, self.leader, self.gamma)
        return ClosedLoopSystem(self.graph, self.bearings, self.leader, obs, self.models, self.gains)

    def draws(self, seed: int | None = None) -> dict[str, np.ndarray]:
        """The centered uniform draws for random mode, in their fixed order."""
        init = self.raw["initial"]
        rng = np.random.Generator(np.random.Philox(self.seed if seed is None else seed))
        nf, d, w = self.graph.n_followers, self.bearings.d, self.leader.w
        sizes = {"eta_tilde": w * nf, "s": d * nf, "theta_tilde": sum(m.r for m in self.models),
                 "q_tilde": d * nf}
        return {k: (rng.random(sizes[k]) - 0.5) * float(init[k]) for k in RANDOM_KEYS}

    def initial_state(self, system: ClosedLoopSystem | None = None,
                      seed: int | None = None) -> ClosedLoopState:
        system = system or self.build_system()
        init = self.raw["initial"]
        if init["mode"] == "explicit":
            return initial_state(system, *(np.asarray(init[k], dtype=float) for k in EXPLICIT_KEYS))
        draw = self.draws(seed)
        nf, d = self.graph.n_followers, self.bearings.d
        q_f = system.targets(self.leader.q_l0) + draw["q_tilde"]
        eta_hat = np.tile(self.leader.eta0, nf) + draw["eta_tilde"]
        theta_hat = system.theta_true + draw["theta_tilde"]
        B = system.B
        v_hat = (eta_hat.reshape(nf, -1) @ self.leader.F.T).ravel()
        zeta = v_hat - (B.fl @ self.leader.q_l0 + B.ff @ q_f)
        return initial_state(system, q_f, draw["s"] + zeta, eta_hat, theta_hat)

    def explicit_initial(self, state: ClosedLoopState, system: ClosedLoopSystem) -> dict[str, list]:
        """An [initial] table that replays ``state`` exactly."""
        lay = system.layout
        out = {"mode": "explicit"}
        for key, name in zip(EXPLICIT_KEYS, ("q", "qdot", "eta_hat", "theta_hat")):
            out[key] = [float(v) for v in state.x[getattr(lay, name)]]
        return out


def bundled_path(name: str = "rectangle") -> Path:
    return Path(str(resources.files("bearing_formation") / "scenarios" / f"{name}.toml"))


def load_bundled(name: str = "rectangle") -> Scenario:
    return Scenario.load(bundled_path(name))
