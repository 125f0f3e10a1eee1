"""Worst-case coverage and bias-aware length curves against the sd ratio.

Writes one CSV row per (sd ratio, M) with the columns of ``lpvar analyze``.

    python scripts/coverage_curves.py --out results/coverage_curves.csv
"""

import argparse

import numpy as np

from lpvar.cli import ANALYZE_HEADER, analyze_row, atomic_write, csv_text


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=float, nargs="+", default=[0.5, 1.0, 2.0, 3.0])
    ap.add_argument("--points", type=int, default=100, help="sd ratios on (0, 1]")
    ap.add_argument("--level", type=float, default=0.9)
    ap.add_argument("--out", default="results/coverage_curves.csv")
    args = ap.parse_args()
    ratios = np.linspace(1.0 / args.points, 1.0, args.points)
    rows = [analyze_row(float(r), M, 1 - args.level) for M in args.M for r in ratios]
    atomic_write(args.out, csv_text(ANALYZE_HEADER, rows))
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
