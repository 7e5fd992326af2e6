"""Certificate soundness over a batch of random initial draws.

For each seed the certificate is evaluated; certified draws are simulated and
the realized minimum distance and the peak |s_f| and |v_tilde_f| are compared
with gamma_safe, D_sf and D_vf.

    python3 scripts/soundness_batch.py [--runs 50] [--horizon 10] [--eta 4] [--s 1]
"""

import argparse
from concurrent.futures import ProcessPoolExecutor

from bearing_formation.safety import certificate
from bearing_formation.scenario import load_bundled
from bearing_formation.simulation import run


def scenario(eta, s):
    return load_bundled().with_overrides(**{"initial.eta_tilde": eta, "initial.s": s})


def one(args):
    seed, eta, s, T = args
    sc = scenario(eta, s)
    system = sc.build_system()
    init = sc.initial_state(system, seed=seed)
    _, summary = run(system, init, T, sc.dt, 1000)
    return seed, summary


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--horizon", type=float, default=10.0)
    ap.add_argument("--eta", type=float, default=4.0)
    ap.add_argument("--s", type=float, default=1.0)
    ap.add_argument("--jobs", type=int, default=4)
    args = ap.parse_args()
    sc = scenario(args.eta, args.s)
    system = sc.build_system()
    certs, seed = {}, 0
    while len(certs) < args.runs:
        c = certificate(system, sc.initial_state(system, seed=seed), sc.gamma_safe)
        if c.holds:
            certs[seed] = c
        seed += 1
    print(f"{len(certs)} of {seed} draws certified")
    with ProcessPoolExecutor(args.jobs) as ex:
        results = list(ex.map(one, [(k, args.eta, args.s, args.horizon) for k in certs]))
    bad = 0
    print(f"{'seed':>5} {'rhs':>8} {'min dist':>9} {'max|s|':>8} {'D_sf':>8} {'max|v~|':>8} {'D_vf':>8}")
    for k, s in results:
        c = certs[k]
        ok = s.min_distance >= c.gamma_safe and s.max_s_norm <= c.D_sf + 1e-6 and s.max_v_tilde_norm <= c.D_vf + 1e-6
        bad += not ok
        print(f"{k:5d} {c.rhs:8.3f} {s.min_distance:9.3f} {s.max_s_norm:8.4f} {c.D_sf:8.4f} "
              f"{s.max_v_tilde_norm:8.4f} {c.D_vf:8.4f}{'' if ok else '  VIOLATION'}")
    print(f"violations: {bad}")


if __name__ == "__main__":
    main()
