"""LP and VAR impulse-response estimators, lag selection and the Hausman test.

Indices are 0-based.  Data is a T x k array (or a :class:`Series`) ordered
so that the recursive identification places the shock variable ``j`` after
the variables it does not respond to within the period.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .asymptotics import asym_moments
from .coverage import z_crit
from .errors import EstimationError, ModelError
from .model import CompanionModel, IrfTarget

RANK_TOL = 1e-10


def as_array(data) -> np.ndarray:
    v = getattr(data, "values", data)
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.ndim != 2:
        raise ModelError(f"data must be a T x k matrix, got shape {v.shape}")
    return v


@dataclass(frozen=True)
class OlsFit:
    coef: np.ndarray  # q x k
    resid: np.ndarray  # T x k
    xtx_inv: np.ndarray  # q x q
    s2: np.ndarray  # k residual variances with divisor T - q

    def cov(self, col: int = 0) -> np.ndarray:
        """Homoskedastic covariance of the coefficients of outcome ``col``."""
        return self.s2[col] * self.xtx_inv


def ols(Y, X, names=None) -> OlsFit:
    """Least squares of Y (T x k) on X (T x q) via pivoted QR."""
    Y = np.asarray(Y, float)
    X = np.asarray(X, float)
    squeeze = Y.ndim == 1
    if squeeze:
        Y = Y[:, None]
    T, q = X.shape
    if T <= q:
        raise EstimationError(f"need more observations ({T}) than regressors ({q})")
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag[0] == 0 or np.any(diag < RANK_TOL * diag[0]):
        bad = sorted(int(piv[k]) for k in np.nonzero(diag < RANK_TOL * max(diag[0], 1e-300))[0])
        labels = [names[b] for b in bad] if names is not None else bad
        raise EstimationError(f"regressors are (nearly) collinear; dependent columns: {labels}")
    coef_p = scipy.linalg.solve_triangular(R, Q.T @ Y)
    coef = np.empty_like(coef_p)
    coef[piv] = coef_p
    Rinv = scipy.linalg.solve_triangular(R, np.eye(q))
    xtx_p = Rinv @ Rinv.T
    xtx_inv = np.empty_like(xtx_p)
    xtx_inv[np.ix_(piv, piv)] = xtx_p
    resid = Y - X @ coef
    s2 = np.sum(resid**2, axis=0) / (T - q)
    return OlsFit(coef, resid, xtx_inv, s2)


@dataclass(frozen=True)
class EstimateResult:
    method: str
    target: IrfTarget
    point: float
    se: float
    ci: tuple[float, float]
    lag_used: int
    aux: dict = field(default_factory=dict, compare=False, repr=False)

    def to_dict(self) -> dict:
        t = self.target
        return {"method": self.method, "response": t.response, "shock": t.shock,
                "horizon": t.horizon, "point": self.point, "se": self.se,
                "ci": list(self.ci), "lag": self.lag_used}


def _interval(point: float, se: float, level: float) -> tuple[float, float]:
    half = z_crit(1.0 - level) * se
    return point - half, point + half


def _check_target(Y: np.ndarray, target: IrfTarget) -> None:
    k = Y.shape[-1]
    if target.response >= k or target.shock >= k:
        raise ModelError(f"target indices ({target.response}, {target.shock}) out of range for {k} variables")


# ------------------------------------------------------------------ designs

def lag_block(Y: np.ndarray, p: int, start: int, stop: int) -> np.ndarray:
    """[y_{t-1}', ..., y_{t-p}'] for t = start..stop-1; works on (..., T, k)."""
    if p == 0:
        return Y[..., start:stop, :0]
    return np.concatenate([Y[..., start - l:stop - l, :] for l in range(1, p + 1)], axis=-1)


def lp_design(Y: np.ndarray, target: IrfTarget, p: int):
    """Outcome and regressors of the horizon-h local projection.

    Regressor order: y_{j,t}, y_{0..j-1,t}, constant, p lags of all variables,
    so the coefficient of interest is always column 0.  Accepts (..., T, k).
    """
    h, i, j = target.horizon, target.response, target.shock
    T = Y.shape[-2]
    stop = T - h
    y = Y[..., p + h:, i]
    cur = Y[..., p:stop, :]
    const = np.ones(cur.shape[:-1] + (1,))
    X = np.concatenate([cur[..., j:j + 1], cur[..., :j], const, lag_block(Y, p, p, stop)], axis=-1)
    return y, X


def lp_names(k: int, target: IrfTarget, p: int) -> list[str]:
    j = target.shock
    return ([f"y{j}_t"] + [f"y{c}_t" for c in range(j)] + ["const"]
            + [f"y{c}_t-{l}" for l in range(1, p + 1) for c in range(k)])


def var_design(Y: np.ndarray, p: int, start: int | None = None):
    """Outcomes y_t and regressors (1, y_{t-1}, ..., y_{t-p}) for t = start..T-1."""
    start = p if start is None else start
    Yt = Y[..., start:, :]
    const = np.ones(Yt.shape[:-1] + (1,))
    return Yt, np.concatenate([const, lag_block(Y, p, start, Y.shape[-2])], axis=-1)


def _min_obs(T_eff: int, q: int, what: str) -> None:
    if T_eff < q + 5:
        raise EstimationError(f"{what}: {T_eff} usable observations for {q} regressors (need q + 5)")


# --------------------------------------------------------------------- LP

def lp_estimate(data, target: IrfTarget, p: int, level: float = 0.9) -> EstimateResult:
    """Local projection of y_{i,t+h} on y_{j,t} with recursive and lagged controls."""
    Y = as_array(data)
    _check_target(Y, target)
    if p < 0:
        raise ModelError("lag length must be non-negative")
    y, X = lp_design(Y, target, p)
    _min_obs(y.shape[0], X.shape[1], f"LP at horizon {target.horizon}")
    fit = ols(y, X, lp_names(Y.shape[1], target, p))
    point = float(fit.coef[0, 0])
    se = float(np.sqrt(fit.cov()[0, 0]))
    return EstimateResult("LP", target, point, se, _interval(point, se, level), p,
                          {"nobs": y.shape[0], "resid_var": float(fit.s2[0])})


def lp_path(data, response: int, shock: int, horizons, p: int, level: float = 0.9):
    return [lp_estimate(data, IrfTarget(response, shock, h), p, level) for h in horizons]


# -------------------------------------------------------------------- VAR

@dataclass(frozen=True)
class VarFit:
    """Reduced-form VAR(p) with intercept and its recursive identification."""

    intercept: np.ndarray  # k
    A: np.ndarray  # companion matrix (kp x kp)
    Sigma: np.ndarray  # residual covariance, divisor T - p
    chol: np.ndarray  # lower Cholesky factor of Sigma
    resid: np.ndarray
    S: np.ndarray  # demeaned second moment of the stacked lag vector
    p: int

    @property
    def k(self) -> int:
        return self.Sigma.shape[0]

    @property
    def nobs(self) -> int:
        return self.resid.shape[0]

    def lag_matrices(self) -> np.ndarray:
        k = self.k
        return np.stack([self.A[:k, l * k:(l + 1) * k] for l in range(self.p)])

    def companion(self) -> CompanionModel:
        """Plug-in companion model: H = C diag(C)^{-1}, D = diag(C)^2."""
        k, n = self.k, self.k * self.p
        dc = np.diag(self.chol)
        H = np.zeros((n, k))
        H[:k] = self.chol / dc
        return CompanionModel(self.A, H, dc**2, None, 0.5, k, self.p)

    def irf(self, target: IrfTarget, powers=None) -> float:
        h, i, j = target.horizon, target.response, target.shock
        nu = np.zeros(self.A.shape[0])
        nu[:self.k] = self.chol[:, j] / self.chol[j, j]
        if powers is not None:
            return float(powers[h][i] @ nu)
        return float((np.linalg.matrix_power(self.A, h) @ nu)[i])


def var_fit(data, p: int) -> VarFit:
    Y = as_array(data)
    T, k = Y.shape
    if p < 1:
        raise ModelError("the VAR estimator needs at least one lag")
    Yt, X = var_design(Y, p)
    _min_obs(Yt.shape[0], X.shape[1], f"VAR({p})")
    names = ["const"] + [f"y{c}_t-{l}" for l in range(1, p + 1) for c in range(k)]
    fit = ols(Yt, X, names)
    n = k * p
    A = np.zeros((n, n))
    A[:k] = fit.coef[1:].T
    if p > 1:
        A[k:, :n - k] = np.eye(n - k)
    Sigma = fit.resid.T @ fit.resid / Yt.shape[0]
    try:
        C = np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        raise EstimationError("residual covariance is not positive definite") from None
    Z = X[:, 1:] - X[:, 1:].mean(axis=0)
    S = Z.T @ Z / Yt.shape[0]
    return VarFit(fit.coef[0], A, Sigma, C, fit.resid, S, p)


def var_path(data, response: int, shock: int, horizons, p: int, level: float = 0.9,
             fit: VarFit | None = None):
    """VAR estimates and delta-method intervals at several horizons."""
    Y = as_array(data)
    horizons = list(horizons)
    targets = [IrfTarget(response, shock, h) for h in horizons]
    for t in targets:
        _check_target(Y, t)
    fit = var_fit(Y, p) if fit is None else fit
    cm = fit.companion()
    P = cm.powers(max(horizons))
    mom = asym_moments(cm, targets, S=fit.S, check=False)
    avar = np.maximum(np.diag(mom.avar_var), 0.0)
    out = []
    for t, v in zip(targets, avar):
        point = fit.irf(t, P)
        se = float(np.sqrt(v / fit.nobs))
        out.append(EstimateResult("VAR", t, point, se, _interval(point, se, level), p,
                                  {"A": fit.A, "Sigma": fit.Sigma, "avar": float(v),
                                   "nobs": fit.nobs}))
    return out


def var_estimate(data, target: IrfTarget, p: int, level: float = 0.9) -> EstimateResult:
    """delta_h = e_i' A^h nu with nu the unit-normalized Cholesky column of shock j."""
    return var_path(data, target.response, target.shock, [target.horizon], p, level)[0]


# ----------------------------------------------------------- lag selection

@dataclass(frozen=True)
class LagSelection:
    selected: int
    values: dict
    rule: str
    penalty: float


def select_lag_ic(data, K: int, criterion="aic") -> LagSelection:
    """argmin_p log det Sigma(p) + p g_T over p = 0..K on the common sample t >= K.

    ``criterion`` is "aic" (g = 2k^2/T), "bic" (g = k^2 log T / T) or a float g,
    with T the common effective sample size.  Ties go to the smaller p.
    """
    Y = as_array(data)
    T, k = Y.shape
    T_eff = T - K
    if K < 0 or T_eff <= k * K + 1:
        raise EstimationError(f"cannot compare lags 0..{K} with T={T} and {k} variables")
    if isinstance(criterion, str):
        rule = criterion.lower()
        if rule == "aic":
            g = 2.0 * k * k / T_eff
        elif rule == "bic":
            g = k * k * np.log(T_eff) / T_eff
        else:
            raise ModelError(f"unknown information criterion {criterion!r}")
    else:
        rule, g = "custom", float(criterion)
    values = {}
    for p in range(K + 1):
        Yt, X = var_design(Y, p, start=K)
        fit = ols(Yt, X)
        Sig = fit.resid.T @ fit.resid / T_eff
        sign, logdet = np.linalg.slogdet(Sig)
        if sign <= 0:
            raise EstimationError(f"singular residual covariance at p={p}")
        values[p] = float(logdet + p * g)
    best = min(values, key=lambda q: (values[q], q))
    return LagSelection(best, values, rule, float(g))


# ------------------------------------------------------------------ Hausman

@dataclass(frozen=True)
class HausmanResult:
    statistic: float
    reject: bool
    critical: float


def hausman(lp: EstimateResult, var: EstimateResult, avar_lp=None, avar_var=None,
            T=None, level: float = 0.9) -> HausmanResult:
    """|LP - VAR| scaled by the variance gap.

    With ``avar_lp``/``avar_var`` (and T) the asymptotic variances are used,
    otherwise the estimated sampling variances se^2 of the two results.
    """
    if avar_lp is not None or avar_var is not None:
        if avar_lp is None or avar_var is None or T is None:
            raise ModelError("pass avar_lp, avar_var and T together")
        gap = (float(avar_lp) - float(avar_var)) / float(T)
        if not float(avar_var) > 0:
            raise EstimationError("test inapplicable: aVar(VAR) must be positive")
    else:
        gap = lp.se**2 - var.se**2
        # both variances zero up to rounding, e.g. the impact response
        if lp.se <= 1e-10 * max(1.0, abs(lp.point)):
            gap = 0.0
    if not gap > 0:
        raise EstimationError("test inapplicable: LP variance does not exceed VAR variance")
    stat = abs(lp.point - var.point) / np.sqrt(gap)
    z = z_crit(1.0 - level)
    return HausmanResult(float(stat), bool(stat > z), z)
