"""Print the operation-count and signature-size tables for both backends.

    python3 scripts/reproduce_tables.py [--format table|json-lines] [--out FILE]
"""

import argparse
import random

from avatrace import bench
from avatrace.bilinear import BLS12_381_R, setup


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--format", choices=("table", "json-lines"), default="table")
    ap.add_argument("--out", default=None)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    backends = [
        setup(128, "production"),
        setup(128, "transparent", insecure_toy_group=True, toy_order=BLS12_381_R),
    ]
    chunks = []
    for params in backends:
        rng = random.Random(args.seed)
        for report in (bench.ops_report(params, rng), bench.measure_sizes(params, rng)):
            chunks.append(bench.format_report(report, args.format))
    text = "\n\n".join(chunks) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text, end="")


if __name__ == "__main__":
    main()
