"""Run the bundled rectangle scenario and print the summary and certificate.

    python3 scripts/run_default.py [--horizon 30] [--out out/default]
"""

import argparse
from pathlib import Path

from bearing_formation.cli import simulate_to
from bearing_formation.scenario import load_bundled


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--horizon", type=float, default=None)
    ap.add_argument("--out", default="out/default")
    args = ap.parse_args()
    sc = load_bundled()
    if args.horizon is not None:
        sc = sc.with_overrides(**{"integration.T": args.horizon})
    out = Path(args.out)
    simulate_to(sc, out)
    for name in ("summary.txt", "certificate.txt"):
        print(f"--- {name}")
        print((out / name).read_text(), end="")


if __name__ == "__main__":
    main()
