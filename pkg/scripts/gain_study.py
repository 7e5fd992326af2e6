"""Terminal errors of the default scenario across observer and controller gains.

    python3 scripts/gain_study.py [--horizon 30] [--jobs 4]

gamma = default uses the fallback gain 1.1 / lambda_min(L_ff), where 2 lambda_min(L_ff) gamma = 2.2.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor

from bearing_formation.scenario import default_gamma, load_bundled
from bearing_formation.simulation import run

GRID = [
    ("default", 5.0, 10.0),
    (2.0, 1.0, 1.0),
    (2.0, 5.0, 1.0),
    (2.0, 5.0, 10.0),
    (2.0, 10.0, 10.0),
    (4.0, 5.0, 10.0),
]


def one(args):
    gamma, ks, kt, T = args
    sc = load_bundled()
    changes = {"gains.Lambda_s": ks, "gains.Lambda_theta": kt, "integration.T": T}
    if gamma == "default":
        gamma = default_gamma(sc.graph)
    changes["gains.gamma"] = gamma
    sc = sc.with_overrides(**changes)
    system = sc.build_system()
    _, s = run(system, sc.initial_state(system), T, sc.dt, 1000)
    return gamma, ks, kt, s


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--horizon", type=float, default=30.0)
    ap.add_argument("--jobs", type=int, default=4)
    args = ap.parse_args()
    with ProcessPoolExecutor(args.jobs) as ex:
        rows = list(ex.map(one, [(*g, args.horizon) for g in GRID]))
    print(f"{'gamma':>8} {'Lam_s':>6} {'Lam_th':>6} {'|q_tilde|':>10} {'|s|':>10} {'|eta_tilde|':>11} "
          f"{'V1 inc':>6} {'V2 inc':>6} {'min dist':>8}")
    for gamma, ks, kt, s in rows:
        print(f"{gamma:8.4f} {ks:6.1f} {kt:6.1f} {s.q_tilde_norm:10.2e} {s.s_norm:10.2e} {s.eta_tilde_norm:11.2e} "
              f"{s.V1_violations:6d} {s.V2_violations:6d} {s.min_distance:8.3f}")


if __name__ == "__main__":
    main()
