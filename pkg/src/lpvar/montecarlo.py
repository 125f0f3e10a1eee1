"""Monte Carlo coverage, length and RMSE experiments for LP and VAR intervals.

Replication r draws its data from sub-stream (seed, r) and its bootstrap
draws from a separate derived stream, so a report depends only on the
configuration and never on the number of worker processes.
"""

from __future__ import annotations

import hashlib
import json
import os
import subprocess
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .asymptotics import least_favorable
from .bootstrap import bootstrap_intervals
from .errors import EstimationError, ModelError, NumericalError
from .estimate import hausman, lp_estimate, select_lag_ic, var_path
from .model import IrfTarget, LocalModel, build_companion, model_from_dict, model_to_dict, true_irf
from .simulate import SHOCK_DISTS, simulate_replication

METHODS = ("LP-delta", "LP-boot", "VAR-delta", "VAR-boot")
LAG_RULES = ("fixed", "aic", "bic")
MAX_FAILURE_SHARE = 0.05


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo design.

    ``lags`` is the estimation lag length for ``lag_rule="fixed"`` and the
    largest lag considered by the information criterion otherwise.  If
    ``least_favorable`` = {"horizon": h, "M": M} the model's MA term is
    replaced by the norm-M polynomial that maximizes the VAR bias at h.
    """

    model: LocalModel
    T: int
    horizons: tuple[int, ...]
    response: int = 0
    shock: int = 0
    methods: tuple[str, ...] = ("LP-delta", "VAR-delta")
    lag_rule: str = "fixed"
    lags: int = 1
    reps: int = 2000
    level: float = 0.9
    seed: int = 0
    B: int = 1000
    least_favorable: dict | None = None
    burn_in: int | None = None
    shock_dist: str = "gaussian"

    def __post_init__(self):
        object.__setattr__(self, "horizons", tuple(int(h) for h in self.horizons))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.reps < 1:
            raise ModelError("reps must be at least 1")
        if not self.horizons or min(self.horizons) < 0:
            raise ModelError("horizons must be a non-empty list of non-negative integers")
        if not 0 < self.level < 1:
            raise ModelError("level must lie in (0, 1)")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise ModelError(f"unknown methods {bad}; choose from {METHODS}")
        if self.lag_rule not in LAG_RULES:
            raise ModelError(f"lag_rule must be one of {LAG_RULES}")
        if self.lags < 1:
            raise ModelError("lags must be at least 1")
        if self.shock_dist not in SHOCK_DISTS:
            raise ModelError(f"unknown shock distribution {self.shock_dist!r}")
        k = self.model.obs_dim
        if not (0 <= self.response < k and 0 <= self.shock < k):
            raise ModelError(f"response/shock indices must lie in 0..{k - 1}")
        if self.least_favorable is not None:
            lf = dict(self.least_favorable)
            if set(lf) != {"horizon", "M"}:
                raise ModelError("least_favorable needs exactly the keys 'horizon' and 'M'")
            object.__setattr__(self, "least_favorable", {"horizon": int(lf["horizon"]), "M": float(lf["M"])})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["model"] = model_to_dict(self.model)
        d["horizons"] = list(self.horizons)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ModelError(f"unknown experiment keys: {sorted(unknown)}")
        missing = {"model", "T", "horizons"} - set(d)
        if missing:
            raise ModelError(f"missing experiment keys: {sorted(missing)}")
        kw = dict(d)
        kw["model"] = model_from_dict(d["model"])
        return cls(**kw)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def dgp_model(cfg: ExperimentConfig) -> LocalModel:
    """Model actually simulated (with the least-favorable MA term if requested)."""
    if cfg.least_favorable is None:
        return cfg.model
    lf = cfg.least_favorable
    cm = build_companion(cfg.model.with_misspec(None))
    alpha = least_favorable(cm, IrfTarget(cfg.response, cfg.shock, lf["horizon"]), lf["M"])
    return cfg.model.with_misspec(alpha)


def _boot_seed(seed: int, rep: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(rep), 1))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _choose_lag(cfg: ExperimentConfig, Y: np.ndarray) -> tuple[int, int]:
    """(selected lag, lag used for estimation); estimation needs at least one lag."""
    if cfg.lag_rule == "fixed":
        return cfg.lags, cfg.lags
    sel = select_lag_ic(Y, cfg.lags, cfg.lag_rule).selected
    return sel, max(sel, 1)


def run_replication(cfg: ExperimentConfig, model: LocalModel, rep: int) -> dict:
    """Point estimates and intervals of every method for one replication."""
    Y = simulate_replication(model, cfg.T, cfg.seed, rep, cfg.burn_in, cfg.shock_dist)
    selected, p = _choose_lag(cfg, Y)
    out = {"rep": rep, "selected": selected, "lag": p, "results": {}, "hausman": {}}
    i, j, hs = cfg.response, cfg.shock, cfg.horizons
    res = out["results"]
    lp = var = None
    if "LP-delta" in cfg.methods or "LP-boot" in cfg.methods or "VAR-delta" in cfg.methods:
        lp = [lp_estimate(Y, IrfTarget(i, j, h), p, cfg.level) for h in hs]
        var = var_path(Y, i, j, hs, p, cfg.level)
    if "LP-delta" in cfg.methods:
        res["LP-delta"] = [(r.point, *r.ci) for r in lp]
    if "VAR-delta" in cfg.methods:
        res["VAR-delta"] = [(r.point, *r.ci) for r in var]
    boot = [m[:-5] for m in cfg.methods if m.endswith("-boot")]
    if boot:
        bi = bootstrap_intervals(Y, i, j, hs, p, cfg.level, cfg.B, _boot_seed(cfg.seed, rep), tuple(boot))
        if lp is None:
            lp = [lp_estimate(Y, IrfTarget(i, j, h), p, cfg.level) for h in hs]
            var = var_path(Y, i, j, hs, p, cfg.level)
        pts = {"LP": lp, "VAR": var}
        for m in boot:
            res[m + "-boot"] = [(r.point, lo, hi) for r, (lo, hi) in zip(pts[m], bi[m])]
    if "LP-delta" in cfg.methods and "VAR-delta" in cfg.methods:
        for h, a, b in zip(hs, lp, var):
            try:
                out["hausman"][h] = hausman(a, b, level=cfg.level).reject
            except EstimationError:
                out["hausman"][h] = None
    return out


def _safe_replication(args) -> dict:
    cfg, model, rep = args
    try:
        return run_replication(cfg, model, rep)
    except (EstimationError, NumericalError, np.linalg.LinAlgError) as exc:
        return {"rep": rep, "failure": f"{type(exc).__name__}: {exc}"}


def _chunksize(reps: int, workers: int) -> int:
    return max(1, reps // (workers * 8))


def default_workers() -> int:
    env = os.environ.get("LPVAR_THREADS")
    if env:
        return max(1, int(env))
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


def _map(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) < 2:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=_chunksize(len(tasks), workers)))


@dataclass
class McReport:
    config: ExperimentConfig
    rows: list = field(default_factory=list)  # per (method, horizon) metrics
    hausman: dict = field(default_factory=dict)  # horizon -> (rejection freq, applicable reps)
    mean_lag: float = float("nan")
    lag_freq: dict = field(default_factory=dict)
    failures: int = 0
    failure_messages: list = field(default_factory=list)
    truth: dict = field(default_factory=dict)

    def get(self, method: str, horizon: int) -> dict:
        for r in self.rows:
            if r["method"] == method and r["horizon"] == horizon:
                return r
        raise KeyError((method, horizon))

    def long_rows(self) -> list[tuple]:
        out = []
        for r in self.rows:
            for metric in ("coverage", "mcse", "median_length", "rmse", "n"):
                out.append((r["method"], r["horizon"], metric, r[metric]))
        for h, (freq, n) in sorted(self.hausman.items()):
            out.append(("Hausman", h, "rejection", freq))
            out.append(("Hausman", h, "n", n))
        return out

    def summary(self) -> dict:
        return {"config": self.config.to_dict(), "config_hash": self.config.digest(),
                "version": version_string(), "reps": self.config.reps, "failures": self.failures,
                "failure_messages": self.failure_messages[:20], "mean_lag": self.mean_lag,
                "lag_freq": {str(k): v for k, v in sorted(self.lag_freq.items())},
                "truth": {str(h): v for h, v in sorted(self.truth.items())},
                "rows": self.rows,
                "hausman": {str(h): {"rejection": f, "n": n} for h, (f, n) in sorted(self.hausman.items())}}


def version_string() -> str:
    try:
        desc = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"],
                              cwd=Path(__file__).resolve().parent, capture_output=True,
                              text=True, timeout=5)
        if desc.returncode == 0 and desc.stdout.strip():
            return f"{__version__}+g{desc.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def lower_median(x) -> float:
    x = np.sort(np.asarray(x, float))
    return float(x[(x.size - 1) // 2]) if x.size else float("nan")


def aggregate(cfg: ExperimentConfig, model: LocalModel, reps: list[dict]) -> McReport:
    reps = sorted(reps, key=lambda r: r["rep"])
    ok = [r for r in reps if "failure" not in r]
    failed = [r for r in reps if "failure" in r]
    cm = build_companion(model)
    truth = {h: true_irf(cm, IrfTarget(cfg.response, cfg.shock, h), cfg.T) for h in cfg.horizons}
    report = McReport(cfg, failures=len(failed), failure_messages=[r["failure"] for r in failed],
                      truth=truth)
    if len(failed) > MAX_FAILURE_SHARE * cfg.reps:
        raise EstimationError(f"{len(failed)} of {cfg.reps} replications failed; first: {failed[0]['failure']}")
    n = len(ok)
    for m in cfg.methods:
        for c, h in enumerate(cfg.horizons):
            arr = np.array([r["results"][m][c] for r in ok]).reshape(n, 3)
            th = truth[h]
            # slack for intervals that collapse to a point (e.g. the impact response)
            tol = 1e-10 * max(1.0, abs(th))
            cover = (arr[:, 1] - tol <= th) & (th <= arr[:, 2] + tol)
            cov = float(cover.mean()) if n else float("nan")
            report.rows.append({
                "method": m, "horizon": h, "coverage": cov,
                "mcse": float(np.sqrt(cov * (1 - cov) / n)) if n else float("nan"),
                "median_length": lower_median(arr[:, 2] - arr[:, 1]),
                "rmse": float(np.sqrt(np.mean((arr[:, 0] - th) ** 2))) if n else float("nan"),
                "n": n})
    if ok and ok[0]["hausman"]:
        for h in cfg.horizons:
            vals = [r["hausman"][h] for r in ok if r["hausman"][h] is not None]
            report.hausman[h] = (float(np.mean(vals)) if vals else float("nan"), len(vals))
    if ok:
        report.mean_lag = float(np.mean([r["selected"] for r in ok]))
        report.lag_freq = dict(Counter(r["selected"] for r in ok))
    return report


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> McReport:
    model = dgp_model(cfg)
    workers = default_workers() if workers is None else max(1, int(workers))
    tasks = [(cfg, model, r) for r in range(cfg.reps)]
    return aggregate(cfg, model, _map(_safe_replication, tasks, workers))


def _select_only(args):
    cfg, model, rep = args
    Y = simulate_replication(model, cfg.T, cfg.seed, rep, cfg.burn_in, cfg.shock_dist)
    return select_lag_ic(Y, cfg.lags, cfg.lag_rule).selected


def lag_rule_study(cfg: ExperimentConfig, workers: int | None = None) -> dict:
    """Frequency of each selected lag across replications (no estimation)."""
    if cfg.lag_rule == "fixed":
        raise ModelError("lag_rule_study needs an information-criterion lag rule")
    model = dgp_model(cfg)
    workers = default_workers() if workers is None else max(1, int(workers))
    picks = _map(_select_only, [(cfg, model, r) for r in range(cfg.reps)], workers)
    counts = Counter(picks)
    return {p: counts.get(p, 0) / cfg.reps for p in range(cfg.lags + 1)}


def coverage_vs_lag(cfg: ExperimentConfig, lag_grid, workers: int | None = None) -> list[tuple[int, McReport]]:
    """One report per fixed estimation lag; the DGP is held fixed across the sweep."""
    return [(p, run_experiment(replace(cfg, lag_rule="fixed", lags=int(p)), workers)) for p in lag_grid]


# ---------------------------------------------------------------- presets

def preset(name: str, seed: int = 0) -> ExperimentConfig:
    """``smoke``: tiny run of every method; ``full``: the least-favorable design at scale."""
    if name == "smoke":
        return ExperimentConfig(LocalModel.ar1(0.5), T=240, horizons=(0, 1, 2, 4), methods=METHODS,
                                reps=50, B=200, seed=seed, least_favorable={"horizon": 4, "M": 1.0})
    if name == "full":
        return ExperimentConfig(LocalModel.ar1(0.5), T=1000, horizons=tuple(range(9)), methods=METHODS,
                                reps=2000, B=1000, seed=seed, least_favorable={"horizon": 4, "M": 1.0})
    raise ModelError(f"unknown preset {name!r}; choose 'smoke' or 'full'")
