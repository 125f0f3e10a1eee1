"""Recursive residual bootstrap intervals for VAR and LP impulse responses.

All B pseudo-samples are generated and re-estimated as stacked arrays.  Draw
b uses its own random stream (master seed, b), so intervals do not depend on
evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, ModelError
from .estimate import IrfTarget, as_array, lp_design, lp_estimate, var_design, var_fit
from .model import spectral_radius

DEFAULT_DRAWS = 1000
MAX_REDRAW_SHARE = 0.10


def _draw_rng(seed: int, b: int, attempt: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(b), int(attempt))))


def _batched_ols(Y: np.ndarray, X: np.ndarray):
    """Coefficients, residuals and (X'X)^{-1} for stacked regressions (B, T, q)."""
    XtX = np.einsum("btq,btr->bqr", X, X)
    try:
        inv = np.linalg.inv(XtX)
    except np.linalg.LinAlgError:
        raise EstimationError("singular regressor matrix in a bootstrap sample") from None
    coef = inv @ np.einsum("btq,btk->bqk", X, Y)
    return coef, Y - X @ coef, inv


def _recurse(Y0: np.ndarray, c: np.ndarray, lags: np.ndarray, U: np.ndarray) -> np.ndarray:
    """Stack of paths y_t = c + sum_l A_l y_{t-l} + u_t started from Y0 (p x k)."""
    p, k = Y0.shape if Y0.ndim == 2 else (0, lags.shape[-1])
    B, N, _ = U.shape
    Y = np.empty((B, p + N, k))
    Y[:, :p] = Y0
    B_mat = np.concatenate(list(lags), axis=1).T  # (k p, k)
    for t in range(p, p + N):
        past = Y[:, t - p:t][:, ::-1].reshape(B, -1)
        Y[:, t] = c + past @ B_mat + U[:, t - p]
    return Y


@dataclass(frozen=True)
class BootstrapSamples:
    paths: np.ndarray  # (B, T, k)
    var_coef: np.ndarray  # (B, 1 + k p, k) re-estimated VAR coefficients
    var_resid: np.ndarray
    redraws: int


def residual_bootstrap(data, p: int, B: int = DEFAULT_DRAWS, seed: int = 0, fit=None) -> BootstrapSamples:
    """Pseudo-samples from the estimated VAR(p) with resampled centred residuals.

    Every pseudo-sample starts from the first p observed values.  Samples
    whose re-estimated VAR is explosive are redrawn; more than 10% redraws is
    an error.
    """
    if B < 1:
        raise ModelError("B must be positive")
    Y = as_array(data)
    T, k = Y.shape
    fit = var_fit(Y, p) if fit is None else fit
    if not spectral_radius(fit.A) < 1:
        raise EstimationError("estimated VAR is explosive; recursive bootstrap undefined")
    resid = fit.resid - fit.resid.mean(axis=0)
    lags = fit.lag_matrices()
    N = T - p

    def draw(indices, attempt):
        U = np.empty((len(indices), N, k))
        for r, b in enumerate(indices):
            U[r] = resid[_draw_rng(seed, b, attempt).integers(0, N, size=N)]
        paths = _recurse(Y[:p], fit.intercept, lags, U)
        Yt, X = var_design(paths, p)
        coef, res, _ = _batched_ols(Yt, X)
        return paths, coef, res

    paths, coef, res = draw(range(B), 0)
    redraws = 0
    pending = np.arange(B)
    attempt = 0
    while True:
        comp = _companions(coef[pending], k, p)
        bad = pending[np.max(np.abs(np.linalg.eigvals(comp)), axis=-1) >= 1]
        if bad.size == 0:
            break
        redraws += bad.size
        if redraws > MAX_REDRAW_SHARE * B:
            raise EstimationError(f"{redraws} of {B} bootstrap samples were explosive")
        attempt += 1
        paths[bad], coef[bad], res[bad] = draw(bad, attempt)
        pending = bad
    return BootstrapSamples(paths, coef, res, redraws)


def _companions(coef: np.ndarray, k: int, p: int) -> np.ndarray:
    B = coef.shape[0]
    n = k * p
    A = np.zeros((B, n, n))
    A[:, :k] = np.swapaxes(coef[:, 1:], 1, 2)
    if p > 1:
        A[:, k:, :n - k] = np.eye(n - k)
    return A


def _var_irfs(bs: BootstrapSamples, response: int, shock: int, horizons, k: int, p: int) -> np.ndarray:
    """(B, len(horizons)) VAR impulse responses of the pseudo-samples."""
    A = _companions(bs.var_coef, k, p)
    N = bs.var_resid.shape[1]
    Sig = np.einsum("btk,btl->bkl", bs.var_resid, bs.var_resid) / N
    try:
        C = np.linalg.cholesky(Sig)
    except np.linalg.LinAlgError:
        raise EstimationError("bootstrap residual covariance is not positive definite") from None
    x = np.zeros((A.shape[0], k * p))
    x[:, :k] = C[:, :, shock] / C[:, shock, shock][:, None]
    out = np.empty((A.shape[0], len(horizons)))
    hs = {h: c for c, h in enumerate(horizons)}
    for h in range(max(horizons) + 1):
        if h in hs:
            out[:, hs[h]] = x[:, response]
        x = np.einsum("bnm,bm->bn", A, x)
    return out


def _degenerate(fit) -> bool:
    return float(np.max(np.abs(fit.resid))) <= 1e-12 * max(1.0, float(np.max(np.abs(fit.intercept))))


def bootstrap_intervals(data, response: int, shock: int, horizons, p: int, level: float = 0.9,
                        B: int = DEFAULT_DRAWS, seed: int = 0, methods=("VAR", "LP")) -> dict:
    """Efron percentile intervals (VAR) and percentile-t intervals (LP).

    Returns {method: [(lo, hi) per horizon]}.  The LP t-statistics are
    centred at the auxiliary VAR's impulse response, which is the true value
    in the bootstrap world.
    """
    Y = as_array(data)
    T, k = Y.shape
    horizons = list(horizons)
    fit = var_fit(Y, p)
    a = 1.0 - level
    points = {"VAR": [fit.irf(IrfTarget(response, shock, h)) for h in horizons]}
    out = {}
    if "LP" in methods:
        points["LP"] = []
        for h in horizons:
            r = lp_estimate(Y, IrfTarget(response, shock, h), p, level)
            points["LP"].append((r.point, r.se))
    if _degenerate(fit):
        if "VAR" in methods:
            out["VAR"] = [(v, v) for v in points["VAR"]]
        if "LP" in methods:
            out["LP"] = [(b, b) for b, _ in points["LP"]]
        return out
    bs = residual_bootstrap(Y, p, B, seed, fit)
    if "VAR" in methods:
        d = _var_irfs(bs, response, shock, horizons, k, p)
        lo, hi = np.quantile(d, [a / 2, 1 - a / 2], axis=0)
        out["VAR"] = [(float(l), float(u)) for l, u in zip(lo, hi)]
    if "LP" in methods:
        out["LP"] = []
        for c, h in enumerate(horizons):
            y, X = lp_design(bs.paths, IrfTarget(response, shock, h), p)
            coef, res, inv = _batched_ols(y[..., None], X)
            s2 = np.sum(res[..., 0] ** 2, axis=1) / (y.shape[1] - X.shape[2])
            se = np.sqrt(s2 * inv[:, 0, 0])
            tstat = (coef[:, 0, 0] - points["VAR"][c]) / np.where(se > 0, se, np.inf)
            q_lo, q_hi = np.quantile(tstat, [a / 2, 1 - a / 2])
            beta, se0 = points["LP"][c]
            out["LP"].append((beta - se0 * float(q_hi), beta - se0 * float(q_lo)))
    return out


def bootstrap_var_ci(data, target: IrfTarget, p: int, level: float = 0.9,
                     B: int = DEFAULT_DRAWS, seed: int = 0) -> tuple[float, float]:
    if B < 100:
        raise ModelError("use at least 100 bootstrap draws")
    return bootstrap_intervals(data, target.response, target.shock, [target.horizon], p,
                               level, B, seed, ("VAR",))["VAR"][0]


def bootstrap_lp_ci(data, target: IrfTarget, p: int, level: float = 0.9,
                    B: int = DEFAULT_DRAWS, seed: int = 0) -> tuple[float, float]:
    if B < 100:
        raise ModelError("use at least 100 bootstrap draws")
    return bootstrap_intervals(data, target.response, target.shock, [target.horizon], p,
                               level, B, seed, ("LP",))["LP"][0]
