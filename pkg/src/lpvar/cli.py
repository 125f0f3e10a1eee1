"""Command-line front end: ``lpvar <command> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical failure.
Every output file is written to a temporary name and renamed into place.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import asymptotics as asy
from . import coverage as cov
from .errors import ModelError, NumericalError
from .model import (IrfTarget, LocalModel, build_companion, load_model, misspec_norm,
                    model_from_dict, spectral_radius, check_normalization)

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


# ------------------------------------------------------------------ output

def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def _json_text(obj, indent: int = 0) -> str:
    """JSON with every float at 17 significant digits (non-finite values as null)."""
    pad, inner = " " * indent, " " * (indent + 2)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_json_text(v, indent + 2)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(_json_text(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _json_text(v, indent + 2) for v in obj) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _json_text(obj.tolist(), indent)
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return "null"
    return fmt(obj)


def atomic_write(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    atomic_write(path, _json_text(obj) + "\n")


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(v if isinstance(v, str) else fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------ parsing

def float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def int_list(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                lo, hi = part.split(":")
                out.extend(range(int(lo), int(hi) + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected integers or ranges a:b, got {text!r}") from None
    return out


def _read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ModelError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON ({exc})") from None


def _load_model(path) -> LocalModel:
    try:
        return load_model(path)
    except FileNotFoundError:
        raise ModelError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ModelError(f"{path}: invalid JSON ({exc})") from None


def _add_target(p, horizon=True, multi=False):
    p.add_argument("--response", type=int, required=True, help="response variable index (0-based)")
    p.add_argument("--shock", type=int, required=True, help="shock index (0-based)")
    if horizon:
        if multi:
            p.add_argument("--horizons", type=int_list, required=True, help="e.g. 0,1,2 or 0:8")
        else:
            p.add_argument("--horizon", type=int, required=True)


def _level(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return v


# ---------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    from .simulate import SimSpec, simulate_path, write_series_csv
    model = _load_model(args.model)
    spec = SimSpec(model, args.T, args.seed, args.burn_in, args.shock_dist)
    series = simulate_path(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out.parent, prefix=f".{out.name}.", suffix=".tmp")
    os.close(fd)
    try:
        write_series_csv(series, tmp)
        os.replace(tmp + ".json", str(out) + ".json")
        os.replace(tmp, out)
    finally:
        for f in (tmp, tmp + ".json"):
            if os.path.exists(f):
                os.unlink(f)
    return EXIT_OK


def _lag_choice(args, Y) -> tuple[int, dict]:
    from .estimate import select_lag_ic
    if args.lags in ("aic", "bic"):
        sel = select_lag_ic(Y, args.max_lag, args.lags)
        return sel.selected, {"rule": sel.rule, "selected": sel.selected,
                              "criterion": {str(k): v for k, v in sel.values.items()}}
    try:
        p = int(args.lags)
    except ValueError:
        raise ModelError(f"--lags must be an integer, 'aic' or 'bic', got {args.lags!r}") from None
    return p, {"rule": "fixed", "selected": p}


def cmd_estimate(args) -> int:
    from .bootstrap import bootstrap_intervals
    from .estimate import as_array, lp_estimate, var_path
    from .simulate import read_series_csv
    Y = as_array(read_series_csv(args.data))
    k = Y.shape[1]
    if not (0 <= args.response < k and 0 <= args.shock < k):
        raise ModelError(f"target indices must lie in 0..{k - 1}")
    if args.ci == "bootstrap" and args.seed is None:
        raise ModelError("--seed is required with --ci bootstrap")
    p, lag_info = _lag_choice(args, Y)
    methods = ["LP", "VAR"] if args.method == "both" else [args.method]
    records = []
    results = {}
    if "LP" in methods:
        results["LP"] = [lp_estimate(Y, IrfTarget(args.response, args.shock, h), p, args.level)
                         for h in args.horizons]
    if "VAR" in methods:
        results["VAR"] = var_path(Y, args.response, args.shock, args.horizons, max(p, 1), args.level)
    boot = None
    if args.ci == "bootstrap":
        boot = bootstrap_intervals(Y, args.response, args.shock, args.horizons, max(p, 1), args.level,
                                   args.B, args.seed, tuple(methods))
    for m in methods:
        for c, r in enumerate(results[m]):
            rec = r.to_dict()
            rec["ci_type"] = args.ci
            if boot is not None:
                rec["ci"] = list(boot[m][c])
                rec["B"] = args.B
            records.append(rec)
    write_json(args.out, {"data": str(args.data), "level": args.level, "lag_selection": lag_info,
                          "results": records})
    return EXIT_OK


def analyze_row(ratio: float, M: float, a: float, ellipsoid=None) -> list:
    wc = cov.worst_case_coverage(ratio, M, a)
    tau = math.sqrt(max(1.0 / ratio**2 - 1.0, 0.0))
    wstar = cov.optimal_weight_length(M, ratio, a)
    joint = cov.worst_case_joint(ratio, a) if ratio < 1 else float("nan")
    return [ratio, M, wc, M * tau, cov.rel_length(ratio, M, 0.0, a), wstar,
            cov.rel_length(ratio, M, wstar, a), cov.optimal_weight_mse(M),
            wc if ellipsoid is None else ellipsoid, joint]


ANALYZE_HEADER = ["sd_ratio", "M", "wc_coverage", "wc_bias", "ba_rel_length", "omega_star",
                  "rel_length_star", "omega_mse", "ellipsoid_coverage", "joint_prob"]


def cmd_analyze(args) -> int:
    a = 1.0 - args.level
    rows = []
    if args.model is not None:
        if args.response is None or args.shock is None or not args.horizons:
            raise ModelError("--model needs --response, --shock and --horizons")
        cm = build_companion(_load_model(args.model))
        header = ["horizon"] + ANALYZE_HEADER
        for h in args.horizons:
            mom = asy.asym_moments(cm, IrfTarget(args.response, args.shock, h))
            lp, var = mom.scalar()
            if var <= 0:
                raise ModelError(f"aVar(VAR) is zero at horizon {h}; ratio undefined")
            ratio = min(math.sqrt(var / lp), 1.0)
            for M in args.M_grid:
                rows.append([h] + analyze_row(ratio, M, a, asy.ellipsoid_wc_coverage(mom, M, a)))
    else:
        if args.ratios is None:
            raise ModelError("give either --model (with a target) or --ratios")
        header = ANALYZE_HEADER
        for ratio in args.ratios:
            if not 0 < ratio <= 1:
                raise ModelError(f"sd ratios must lie in (0, 1], got {ratio}")
            for M in args.M_grid:
                rows.append(analyze_row(ratio, M, a))
    atomic_write(args.out, csv_text(header, rows))
    return EXIT_OK


def cmd_leastfav(args) -> int:
    model = _load_model(args.model)
    cm = build_companion(model.with_misspec(None))
    target = IrfTarget(args.response, args.shock, args.horizon)
    alpha = asy.least_favorable(cm, target, args.M, tol=args.tol)
    m = cm.m
    norm = misspec_norm(alpha, cm.D)
    bias = asy.abias_var(cm, target, alpha)
    header = ["lag"] + [f"a_{r}_{c}" for r in range(m) for c in range(m)] + ["norm", "bias"]
    rows = [[lag] + list(alpha[lag].reshape(-1)) + [norm, bias] for lag in range(1, alpha.length + 1)]
    atomic_write(args.out, csv_text(header, rows))
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    from dataclasses import replace
    from .montecarlo import ExperimentConfig, preset, run_experiment
    if (args.config is None) == (args.preset is None):
        raise ModelError("give exactly one of --config or --preset")
    if args.config is not None:
        cfg = ExperimentConfig.from_dict(_read_json(args.config))
    else:
        cfg = preset(args.preset)
    cfg = replace(cfg, seed=args.seed)
    if args.reps is not None:
        cfg = replace(cfg, reps=args.reps)
    report = run_experiment(cfg, args.threads)
    out = Path(args.out_dir)
    rows = [(m, h, metric, v) for m, h, metric, v in report.long_rows()]
    atomic_write(out / "report.csv", csv_text(["method", "horizon", "metric", "value"], rows))
    write_json(out / "summary.json", report.summary())
    print(f"config {report.config.digest()}: {cfg.reps} replications, {report.failures} failures")
    return EXIT_OK


def cmd_validate(args) -> int:
    d = _read_json(args.file)
    if "T" in d and "horizons" in d:
        from .montecarlo import ExperimentConfig, dgp_model
        cfg = ExperimentConfig.from_dict(d)
        dgp_model(cfg)
        print(f"experiment config ok (hash {cfg.digest()})")
        return EXIT_OK
    model = model_from_dict(d)
    cm = build_companion(model)
    print(f"model ok: {model.obs_dim} variables, {model.n_shocks} shocks, {model.lags} lags, "
          f"spectral radius {fmt(spectral_radius(cm.A))}, misspec norm {fmt(misspec_norm(model.misspec, cm.D))}")
    for j in range(min(model.n_shocks, cm.n)):
        try:
            check_normalization(cm.H, j)
            print(f"  shock {j}: recursive normalization holds")
        except ModelError as exc:
            print(f"  shock {j}: {exc}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lpvar", allow_abbrev=False,
                                 description="LP vs VAR impulse-response inference under local misspecification.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", allow_abbrev=False, help="simulate a sample path to CSV")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument("--T", type=int, required=True, help="sample size")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--burn-in", type=int, default=None)
    p.add_argument("--shock-dist", choices=["gaussian", "rademacher"], default="gaussian")
    p.add_argument("--out", required=True, help="output CSV (a .json sidecar is written next to it)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", allow_abbrev=False, help="LP/VAR impulse responses from a data CSV")
    p.add_argument("--data", required=True)
    _add_target(p, multi=True)
    p.add_argument("--lags", default="4", help="lag length, or 'aic' / 'bic'")
    p.add_argument("--max-lag", type=int, default=24, help="largest lag considered by aic/bic")
    p.add_argument("--method", choices=["LP", "VAR", "both"], default="both")
    p.add_argument("--ci", choices=["delta", "bootstrap"], default="delta")
    p.add_argument("--B", type=int, default=1000, help="bootstrap draws")
    p.add_argument("--seed", type=int, default=None, help="required with --ci bootstrap")
    p.add_argument("--level", type=_level, default=0.9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("analyze", allow_abbrev=False, help="worst-case coverage and length curves")
    p.add_argument("--model", default=None, help="model JSON (uses its implied sd ratio)")
    p.add_argument("--response", type=int, default=None)
    p.add_argument("--shock", type=int, default=None)
    p.add_argument("--horizons", type=int_list, default=None)
    p.add_argument("--ratios", type=float_list, default=None, help="sd ratios in (0, 1] (without --model)")
    p.add_argument("--M-grid", type=float_list, required=True, help="misspecification bounds")
    p.add_argument("--level", type=_level, default=0.9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("montecarlo", allow_abbrev=False, help="run a Monte Carlo experiment")
    p.add_argument("--config", default=None, help="experiment JSON")
    p.add_argument("--preset", choices=["smoke", "full"], default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--reps", type=int, default=None, help="override the number of replications")
    p.add_argument("--threads", type=int, default=None, help="worker processes (default: $LPVAR_THREADS or all cores)")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_montecarlo)

    p = sub.add_parser("leastfav", allow_abbrev=False, help="least-favorable MA polynomial coefficients")
    p.add_argument("--model", required=True)
    _add_target(p)
    p.add_argument("--M", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_leastfav)

    p = sub.add_parser("validate", allow_abbrev=False, help="check a model or experiment JSON file")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"lpvar {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ModelError, ValueError, KeyError, TypeError, OSError) as exc:
        print(f"lpvar {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
