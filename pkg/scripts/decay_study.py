#!/usr/bin/env python3
"""Decay-rate study: fits the far-field exponential order of flat vortices
for a sweep of exponents m at fixed beta and compares against
sqrt(2^m * beta)."""

import argparse
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from vortexstring import cli  # noqa: E402


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--beta", type=float, default=2.0)
    parser.add_argument("--m", type=float, nargs="+", default=[1.0, 2.0, 3.0])
    parser.add_argument("--out", default="out/decay_study")
    parser.add_argument("--nodes", type=int, default=401)
    parser.add_argument("--radius", type=float, default=16.0)
    args = parser.parse_args()

    configs = []
    for m in args.m:
        raw = {
            "mode": "vortex",
            "spec": {"centers": [[[0.0, 0.0], 1]], "m": m, "beta": args.beta,
                     "G": 0.0},
            "grid": {"radius": args.radius, "nodes_per_side": args.nodes},
            "output_dir": f"{args.out}/m{m}",
        }
        configs.append(cli.parse_config(raw))
    rows, status = cli.sweep(configs, parallelism=len(configs),
                             summary_path=Path(args.out) / "summary.csv")
    print(f"{'m':>6} {'fitted':>10} {'sqrt(2^m b)':>12} {'deviation':>10}")
    for m, row in zip(args.m, rows):
        fit = float(row["decay_fit"])
        target = math.sqrt(2.0**m * args.beta)
        print(f"{m:6.2f} {fit:10.4f} {target:12.4f} "
              f"{abs(fit - target) / target:9.2%}")
    return status


if __name__ == "__main__":
    sys.exit(main())
