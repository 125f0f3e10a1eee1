"""Least-favorable MA coefficients of a local-to-AR(1) for several horizons.

    python scripts/least_favorable_shapes.py --rho 0.5 0.9 --horizons 1 4 8
"""

import argparse

from lpvar.asymptotics import least_favorable
from lpvar.cli import atomic_write, csv_text
from lpvar.model import IrfTarget, LocalModel, build_companion


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rho", type=float, nargs="+", default=[0.5, 0.9])
    ap.add_argument("--horizons", type=int, nargs="+", default=[1, 4, 8])
    ap.add_argument("--M", type=float, default=1.0)
    ap.add_argument("--max-lag", type=int, default=30, help="lags written per curve")
    ap.add_argument("--out", default="results/least_favorable_shapes.csv")
    args = ap.parse_args()
    rows = []
    for rho in args.rho:
        cm = build_companion(LocalModel.ar1(rho))
        for h in args.horizons:
            alpha = least_favorable(cm, IrfTarget(0, 0, h), args.M)
            for lag in range(1, min(alpha.length, args.max_lag) + 1):
                rows.append([rho, h, lag, alpha[lag][0, 0]])
    atomic_write(args.out, csv_text(["rho", "horizon", "lag", "alpha"], rows))
    print(f"wrote {len(rows)} rows to {args.out}")


if __name__ == "__main__":
    main()
