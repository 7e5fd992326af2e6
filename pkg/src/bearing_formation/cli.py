"""Command-line driver: check | simulate | safety | sweep.

Exit codes: 0 pass, 1 failed check or certificate, 2 usage or parse error,
3 numerical blowup.

trajectory.csv columns, in order:
    t,
    q{i}_{k}     positions of every agent i = 1..n (leaders first), k = 1..d
    qdot{i}_{k}  velocities of every agent
    s{i}_{k}     sliding variable of every follower
    q_tilde_norm, eta_tilde_norm, theta_tilde_norm, V1, V2, min_dist,
    tau{i}_{k}   follower torques
    v_tilde_norm
Values are written with 17 significant digits so reruns are byte-identical.
"""

from __future__ import annotations

import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np
import tomli_w

from .bearings import bearing_laplacian, certify_localizability
from .errors import CertificateFailure, CertificatePrereqFailure, FormationError, NumericalBlowup, ParseError
from .graph import followers_reachable_from_leaders
from .safety import certificate
from .scenario import Scenario
from .simulation import TrajectoryLog, run

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3


def csv_header(n: int, leaders: int, d: int) -> list[str]:
    agents = range(1, n + 1)
    followers = range(leaders + 1, n + 1)
    cols = ["t"]
    cols += [f"q{i}_{k}" for i in agents for k in range(1, d + 1)]
    cols += [f"qdot{i}_{k}" for i in agents for k in range(1, d + 1)]
    cols += [f"s{i}_{k}" for i in followers for k in range(1, d + 1)]
    cols += ["q_tilde_norm", "eta_tilde_norm", "theta_tilde_norm", "V1", "V2", "min_dist"]
    cols += [f"tau{i}_{k}" for i in followers for k in range(1, d + 1)]
    cols.append("v_tilde_norm")
    return cols


def write_trajectory(path: Path, log: TrajectoryLog, n: int, leaders: int, d: int) -> None:
    k = len(log)
    table = np.column_stack([
        log.t, log.q.reshape(k, -1), log.qdot.reshape(k, -1), log.s_f,
        log.q_tilde_norm, log.eta_tilde_norm, log.theta_tilde_norm, log.V1, log.V2, log.min_dist,
        log.tau, log.v_tilde_norm,
    ])
    np.savetxt(path, table, fmt="%.17g", delimiter=",",
               header=",".join(csv_header(n, leaders, d)), comments="")


def _load(path, seed=None, dt=None, horizon=None) -> Scenario:
    sc = Scenario.load(path)
    changes = {}
    if seed is not None:
        changes["seed"] = seed
    if dt is not None:
        changes["integration.dt"] = dt
    if horizon is not None:
        changes["integration.T"] = horizon
    return sc.with_overrides(**changes) if changes else sc


def check_report(sc: Scenario) -> tuple[bool, list[str]]:
    """Load-time checks as (all_pass, report lines)."""
    lines, ok = [], True

    def add(name, passed, detail):
        nonlocal ok
        ok &= bool(passed)
        lines.append(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")

    reach = followers_reachable_from_leaders(sc.graph)
    add("leader reachability", reach,
        "every follower has a path to a leader" if reach else "some follower has no path to a leader")
    loc = certify_localizability(bearing_laplacian(sc.graph, sc.bearings))
    add("localizability", loc.localizable, f"lambda_min(B_ff) = {loc.lambda_min:.6g} (tol {loc.tol:.1e})")
    add("detectability", sc.leader.is_detectable(), "(S, F) passes the PBH test")
    add("bounded exosystem", sc.leader.is_bounded(), "S has no unstable or defective imaginary modes")
    if reach and sc.leader.is_detectable():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            obs = sc.build_system().observer
        add("observer gain", obs.condition_ok,
            f"2 lambda_min(L_ff) gamma = {obs.margin:.6g} (gamma = {obs.gamma:.6g}, needs > 1)")
        add("observer error matrix", obs.hurwitz, "S_f Hurwitz by Lyapunov test")
    return ok, lines


def simulate_to(sc: Scenario, out: Path, force: bool = False) -> int:
    """Run one scenario, write its artifacts into ``out`` and return the exit code."""
    out.mkdir(parents=True, exist_ok=True)
    system = sc.build_system()
    init = sc.initial_state(system)
    replay = dict(sc.raw, initial=sc.explicit_initial(init, system))
    (out / "initial.toml").write_text(tomli_w.dumps(replay))
    try:
        cert_lines = certificate(system, init, sc.gamma_safe, sc.T).lines()
    except CertificatePrereqFailure as e:
        cert_lines = [f"unavailable = {e}"]
    (out / "certificate.txt").write_text("\n".join(cert_lines) + "\n")
    log, summary = run(system, init, sc.T, sc.dt, sc.log_stride, forced=force)
    write_trajectory(out / "trajectory.csv", log, sc.graph.n, sc.graph.n_leaders, sc.bearings.d)
    (out / "summary.txt").write_text("\n".join([f"scenario = {sc.raw.get('name', '')}",
                                                f"seed = {sc.seed}"] + summary.lines()) + "\n")
    return EXIT_OK


def _guarded(fn, *args):
    try:
        return fn(*args)
    except ParseError as e:
        click.echo(f"parse error: {e}", err=True)
        return EXIT_USAGE
    except CertificateFailure as e:
        click.echo(f"{e} (use --force to run anyway)", err=True)
        return EXIT_FAIL
    except NumericalBlowup as e:
        click.echo(str(e), err=True)
        return EXIT_BLOWUP
    except FormationError as e:
        click.echo(f"error: {e}", err=True)
        return EXIT_FAIL


scenario_arg = click.argument("scenario", type=click.Path(exists=True, dir_okay=False))


@click.group()
def main():
    """Bearing-based formation tracking with moving leaders."""


@main.command()
@scenario_arg
def check(scenario):
    """Load-time certificates; exit 0 iff all pass."""
    def body():
        ok, lines = check_report(Scenario.load(scenario))
        click.echo("\n".join(lines))
        return EXIT_OK if ok else EXIT_FAIL
    sys.exit(_guarded(body))


@main.command()
@scenario_arg
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True)
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--force", is_flag=True, help="Run even if load-time checks fail.")
@click.option("--dt", type=float, default=None)
@click.option("--horizon", type=float, default=None)
def simulate(scenario, out, seed, force, dt, horizon):
    """Integrate the closed loop and write trajectory.csv, certificate.txt, summary.txt."""
    def body():
        sc = _load(scenario, seed, dt, horizon)
        code = simulate_to(sc, Path(out), force)
        click.echo((Path(out) / "summary.txt").read_text(), nl=False)
        return code
    sys.exit(_guarded(body))


@main.command()
@scenario_arg
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
def safety(scenario, seed):
    """Collision-avoidance certificate for the materialized initial state; exit 0 iff it holds."""
    def body():
        sc = _load(scenario, seed)
        system = sc.build_system()
        init = sc.initial_state(system)
        cert = certificate(system, init, sc.gamma_safe, sc.T)
        click.echo("\n".join(cert.lines()))
        click.echo(f"\n# initial state (seed {sc.seed})")
        click.echo(tomli_w.dumps({"initial": sc.explicit_initial(init, system)}), nl=False)
        return EXIT_OK if cert.holds else EXIT_FAIL
    sys.exit(_guarded(body))


def _sweep_one(args):
    path, out, seed, force, dt, horizon = args
    return _guarded(lambda: simulate_to(_load(path, seed, dt, horizon), Path(out), force))


@main.command()
@click.argument("scenarios", nargs=-1, required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--force", is_flag=True)
@click.option("--dt", type=float, default=None)
@click.option("--horizon", type=float, default=None)
@click.option("--jobs", type=int, default=1, show_default=True, help="Parallel worker processes.")
def sweep(scenarios, out, seed, force, dt, horizon, jobs):
    """Simulate several scenarios into OUT/<file stem>/; exit with the worst code."""
    tasks = [(p, str(Path(out) / Path(p).stem), seed, force, dt, horizon) for p in scenarios]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            codes = list(ex.map(_sweep_one, tasks))
    else:
        codes = [_sweep_one(t) for t in tasks]
    for (p, *_), c in zip(tasks, codes):
        click.echo(f"{c}  {p}")
    sys.exit(max(codes))


if __name__ == "__main__":
    main()
