"""Time the scheme algorithms and the full login/delegate/interact/trace flow.

    python3 scripts/protocol_timings.py [--batch 20] [--runs 5] [--iris-delay 0.5]
"""

import argparse
import random

from avatrace import bench
from avatrace.bilinear import setup


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=20)
    ap.add_argument("--runs", type=int, default=5)
    ap.add_argument("--iris-delay", type=float, default=0.0)
    ap.add_argument("--format", choices=("table", "json-lines"), default="table")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    params = setup(128, "production")
    print(bench.format_report(bench.timing_report(params, args.batch, random.Random(args.seed)), args.format))
    print()
    report = bench.time_protocols(params, runs=args.runs, iris_delay=args.iris_delay, seed=args.seed)
    print(bench.format_report(report, args.format))


if __name__ == "__main__":
    main()
