import numpy as np
import pytest
from click.testing import CliRunner

from bearing_formation.cli import csv_header, main
from bearing_formation.scenario import Scenario, bundled_path

DEFAULT = str(bundled_path())


@pytest.fixture
def runner():
    return CliRunner()


def write(tmp_path, sc, name="s.toml"):
    p = tmp_path / name
    p.write_text(sc.dumps())
    return str(p)


def test_check_default(runner):
    res = runner.invoke(main, ["check", DEFAULT])
    assert res.exit_code == 0
    assert "lambda_min(B_ff) = 0.292893" in res.output


def test_check_isolated_follower(runner, tmp_path, scenario):
    raw = dict(scenario.raw)
    raw["graph"] = dict(raw["graph"], edges=[e for e in raw["graph"]["edges"] if 6 not in e])
    raw["bearing"] = [b for b in raw["bearing"] if 6 not in (b["i"], b["j"])]
    res = runner.invoke(main, ["check", write(tmp_path, Scenario.from_dict(raw))])
    assert res.exit_code == 1
    assert "FAIL  leader reachability" in res.output


def test_check_non_unit_bearing(runner, tmp_path):
    p = tmp_path / "bad.toml"
    p.write_text(bundled_path().read_text().replace("g = [0.0, 1.0]", "g = [0.0, 2.0]", 1))
    assert runner.invoke(main, ["check", str(p)]).exit_code == 2


def test_missing_file(runner, tmp_path):
    assert runner.invoke(main, ["check", str(tmp_path / "nope.toml")]).exit_code == 2


def test_simulate_artifacts_and_determinism(runner, tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        res = runner.invoke(main, ["simulate", DEFAULT, "--out", str(out), "--horizon", "0.5"])
        assert res.exit_code == 0, res.output
        outs.append(out)
    for name in ("trajectory.csv", "certificate.txt", "summary.txt", "initial.toml"):
        assert (outs[0] / name).exists()
    a = (outs[0] / "trajectory.csv").read_bytes()
    assert a == (outs[1] / "trajectory.csv").read_bytes()
    header = a.decode().splitlines()[0].split(",")
    assert header == csv_header(6, 2, 2)
    data = np.loadtxt(outs[0] / "trajectory.csv", delimiter=",", skiprows=1)
    assert data.shape == (51, len(header))
    replay = tmp_path / "replay"
    res = runner.invoke(main, ["simulate", str(outs[0] / "initial.toml"), "--out", str(replay)])
    assert res.exit_code == 0
    assert (replay / "trajectory.csv").read_bytes() == a


def test_simulate_seed_override(runner, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    runner.invoke(main, ["simulate", DEFAULT, "--out", str(a), "--horizon", "0.05"])
    runner.invoke(main, ["simulate", DEFAULT, "--out", str(b), "--horizon", "0.05", "--seed", "3"])
    assert (a / "trajectory.csv").read_bytes() != (b / "trajectory.csv").read_bytes()
    assert "seed = 3" in (b / "summary.txt").read_text()


def test_simulate_zero_dt(runner, tmp_path):
    res = runner.invoke(main, ["simulate", DEFAULT, "--out", str(tmp_path), "--dt", "0"])
    assert res.exit_code == 2


def test_simulate_blowup(runner, tmp_path, scenario):
    path = write(tmp_path, scenario.with_overrides(**{"gains.Lambda_s": 1e5}))
    res = runner.invoke(main, ["simulate", path, "--out", str(tmp_path / "o"), "--horizon", "1"])
    assert res.exit_code == 3


@pytest.mark.filterwarnings("ignore::bearing_formation.errors.GainTooSmall")
def test_simulate_failed_check_needs_force(runner, tmp_path, scenario):
    path = write(tmp_path, scenario.with_overrides(**{"gains.gamma": 0.1}))
    args = ["simulate", path, "--out", str(tmp_path / "o"), "--horizon", "0.01"]
    assert runner.invoke(main, args).exit_code == 1
    assert runner.invoke(main, args + ["--force"]).exit_code == 0


def test_safety(runner, tmp_path, scenario, system):
    eta = system.leader.eta0
    exact = {"mode": "explicit", "q_f": system.targets(system.leader.q_l0).tolist(),
             "qdot_f": np.tile(system.leader.F @ eta, 4).tolist(), "eta_hat_f": np.tile(eta, 4).tolist(),
             "theta_hat_f": system.theta_true.tolist()}
    res = runner.invoke(main, ["safety", write(tmp_path, scenario.with_overrides(initial=exact))])
    assert res.exit_code == 0
    assert "holds = True" in res.output
    rhs = float(next(l for l in res.output.splitlines() if l.startswith("rhs =")).split("=")[1])
    assert rhs == pytest.approx(2.0, abs=1e-9)
    big = scenario.with_overrides(initial=exact, **{"safety.gamma_safe": 1000.0})
    assert runner.invoke(main, ["safety", write(tmp_path, big, "big.toml")]).exit_code == 1
    res = runner.invoke(main, ["safety", DEFAULT])
    assert res.exit_code == 1 and "[initial]" in res.output


def test_sweep(runner, tmp_path):
    printed = str(bundled_path("rectangle_printed"))
    res = runner.invoke(main, ["sweep", DEFAULT, printed, "--out", str(tmp_path), "--horizon", "0.05"])
    assert res.exit_code == 0, res.output
    assert (tmp_path / "rectangle" / "trajectory.csv").exists()
    assert (tmp_path / "rectangle_printed" / "summary.txt").exists()
