"""Frequencies of AIC- and BIC-selected lag lengths.

Runs a local-to-AR(1) design with the least-favorable MA term and a white
noise design, for each criterion.

    python scripts/lag_study.py --seed 1 --reps 500
"""

import argparse

import numpy as np

from lpvar.cli import atomic_write, csv_text
from lpvar.model import LocalModel
from lpvar.montecarlo import ExperimentConfig, lag_rule_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=2000)
    ap.add_argument("--max-lag", type=int, default=24)
    ap.add_argument("--M", type=float, default=1.0)
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--threads", type=int, default=None)
    ap.add_argument("--out", default="results/lag_study.csv")
    args = ap.parse_args()
    designs = {
        "local_ar1": dict(model=LocalModel.ar1(0.5), least_favorable={"horizon": 4, "M": args.M}),
        "white_noise": dict(model=LocalModel(np.zeros((1, 1, 1)), [[1.0]], [1.0])),
    }
    rows = []
    for name, kw in designs.items():
        for rule in ("aic", "bic"):
            cfg = ExperimentConfig(T=args.T, horizons=(1,), lag_rule=rule, lags=args.max_lag,
                                   reps=args.reps, seed=args.seed, **kw)
            freq = lag_rule_study(cfg, args.threads)
            rows += [[name, rule, p, f] for p, f in freq.items()]
            mean = sum(p * f for p, f in freq.items())
            print(f"{name} {rule}: mean lag {mean:.3f}, mode {max(freq, key=freq.get)}")
    atomic_write(args.out, csv_text(["design", "criterion", "lag", "frequency"], rows))


if __name__ == "__main__":
    main()
