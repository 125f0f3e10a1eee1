"""Sample paths from local-to-SVAR models with reproducible randomness."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.signal

from .errors import ModelError
from .model import LocalModel, model_from_dict, model_to_dict, spectral_radius, build_companion

SHOCK_DISTS = ("gaussian", "rademacher")


def default_burn_in(model: LocalModel) -> int:
    return max(500, 50 * model.lags, 10 * model.misspec.length)


def substream(seed: int, index: int) -> np.random.Generator:
    """Generator for sub-stream ``index`` of master ``seed``.

    Derived through SeedSequence spawn keys, so stream k does not depend on
    how many other streams exist or in which order they are consumed.
    """
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(index),)))


def shock_stream(seed, count: int, shock_vars, dist: str = "gaussian") -> np.ndarray:
    """``count`` x m matrix of independent shocks with variances ``shock_vars``.

    ``seed`` may be an int or an existing Generator.
    """
    sd = np.sqrt(np.asarray(shock_vars, dtype=float).reshape(-1))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(
        np.random.SeedSequence(int(seed)))
    if dist == "gaussian":
        z = rng.standard_normal((count, sd.size))
    elif dist == "rademacher":
        z = 2.0 * rng.integers(0, 2, size=(count, sd.size)) - 1.0
    else:
        raise ModelError(f"unknown shock distribution {dist!r}; expected one of {SHOCK_DISTS}")
    return z * sd


@dataclass(frozen=True)
class SimSpec:
    model: LocalModel
    T: int
    seed: int
    burn_in: int | None = None
    shock_dist: str = "gaussian"

    def __post_init__(self):
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", default_burn_in(self.model))
        if self.T < self.model.lags + 1:
            raise ModelError(f"T={self.T} must exceed the number of lags {self.model.lags}")
        if self.burn_in < max(self.model.misspec.length, 1):
            raise ModelError("burn_in must be at least max(misspec length, 1)")
        if self.shock_dist not in SHOCK_DISTS:
            raise ModelError(f"unknown shock distribution {self.shock_dist!r}")

    def to_dict(self) -> dict:
        return {"model": model_to_dict(self.model), "T": self.T, "seed": self.seed,
                "burn_in": self.burn_in, "shock_dist": self.shock_dist}

    @classmethod
    def from_dict(cls, d: dict) -> "SimSpec":
        return cls(model_from_dict(d["model"]), int(d["T"]), int(d["seed"]),
                   d.get("burn_in"), d.get("shock_dist", "gaussian"))


@dataclass(frozen=True)
class Series:
    values: np.ndarray
    shocks: np.ndarray | None = None
    spec: SimSpec | None = None
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if not np.all(np.isfinite(v)):
            raise ModelError("series contains NaN or Inf")
        object.__setattr__(self, "values", v)
        if self.names is None:
            object.__setattr__(self, "names", tuple(f"y{k + 1}" for k in range(v.shape[1])))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]


def propagate(model: LocalModel, shocks: np.ndarray, T: int) -> np.ndarray:
    """Run the recursion from a zero initial state over all rows of ``shocks``.

    ``T`` only enters through the T^{-zeta} scaling of the MA term.
    """
    N = shocks.shape[0]
    alpha = model.misspec
    u = shocks.copy()
    if alpha.length:
        scale = float(T) ** (-model.zeta)
        for lag in range(1, alpha.length + 1):
            u[lag:] += scale * shocks[:-lag] @ alpha[lag].T
    u = u @ model.impact.T + model.intercept
    k, p = model.obs_dim, model.lags
    # y_t = u_t + [A_1 ... A_p] (y_{t-1}', ..., y_{t-p}')'
    if k == 1:
        denom = np.concatenate([[1.0], -model.lag_matrices[:, 0, 0]])
        return scipy.signal.lfilter([1.0], denom, u[:, 0])[:, None]
    B = np.hstack(list(model.lag_matrices)).T  # (k*p, k)
    y = np.zeros((N + p, k))
    y[p:] = u
    for t in range(p, N + p):
        y[t] += y[t - p:t][::-1].reshape(-1) @ B
    return y[p:]


def simulate_path(spec: SimSpec) -> Series:
    model = spec.model
    if not spectral_radius(build_companion(model).A) < 1:
        raise ModelError("refusing to simulate a non-stationary model")
    eps = shock_stream(spec.seed, spec.T + spec.burn_in, model.shock_vars, spec.shock_dist)
    y = propagate(model, eps, spec.T)
    return Series(y[spec.burn_in:], eps, spec)


def simulate_replication(model: LocalModel, T: int, seed: int, rep: int,
                         burn_in: int | None = None, shock_dist: str = "gaussian") -> np.ndarray:
    """Data matrix for Monte Carlo replication ``rep`` (sub-stream of ``seed``)."""
    burn = default_burn_in(model) if burn_in is None else burn_in
    eps = shock_stream(substream(seed, rep), T + burn, model.shock_vars, shock_dist)
    return propagate(model, eps, T)[burn:]


# ---------------------------------------------------------------- CSV I/O

def write_series_csv(series: Series, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(series.names)
        for row in series.values:
            w.writerow([repr(float(x)) for x in row])
    if series.spec is not None:
        sidecar = path.with_suffix(path.suffix + ".json")
        sidecar.write_text(json.dumps(series.spec.to_dict(), indent=2) + "\n")


def read_series_csv(path) -> Series:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ModelError(f"{path}: empty file")
    header, body = rows[0], [r for r in rows[1:] if r]
    try:
        values = np.array([[float(x) for x in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ModelError(f"{path}: non-numeric entry ({exc})") from None
    if values.ndim != 2 or values.shape[1] != len(header):
        raise ModelError(f"{path}: rows do not match the header width {len(header)}")
    spec = None
    sidecar = path.with_suffix(path.suffix + ".json")
    if sidecar.exists():
        spec = SimSpec.from_dict(json.loads(sidecar.read_text()))
    return Series(values, None, spec, tuple(header))
