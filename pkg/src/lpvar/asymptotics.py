"""Asymptotic variances, VAR bias and the worst-case misspecification problem.

Everything here is evaluated at population parameters (A, H, D) of a
companion model with zeta = 1/2 in mind.  Infinite sums over MA lags are
truncated with a certified geometric tail bound.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats

from .coverage import coverage_r, ncx2_cdf, z_crit
from .errors import ModelError, NumericalError
from .model import CompanionModel, IrfTarget, LagPolynomial, stationary_variance

PSD_TOL = 1e-8
# relative size below which a variance gap is indistinguishable from rounding
GAP_ROUNDOFF = 1e-13


def _as_targets(targets) -> tuple[IrfTarget, ...]:
    if isinstance(targets, IrfTarget):
        return (targets,)
    return tuple(targets)


def psi_matrix(cm: CompanionModel, target: IrfTarget, powers=None) -> np.ndarray:
    """Psi_h = sum_{l=1}^h A^{h-l} H_{.,j} e_i' A^{l-1}  (n x n)."""
    h, i, j = target.horizon, target.response, target.shock
    P = cm.powers(h) if powers is None else powers
    Hj = cm.H[:, j]
    out = np.zeros((cm.n, cm.n))
    for lag in range(1, h + 1):
        out += np.outer(P[h - lag] @ Hj, P[lag - 1][i])
    return out


@dataclass(frozen=True)
class AsymptoticMoments:
    targets: tuple[IrfTarget, ...]
    avar_lp: np.ndarray
    avar_var: np.ndarray
    acov_cross: np.ndarray
    psi_mats: np.ndarray
    abias_var: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.targets)

    @property
    def gap(self) -> np.ndarray:
        return self.avar_lp - self.avar_var

    def scalar(self, index: int = 0) -> tuple[float, float]:
        """(aVar LP, aVar VAR) of one target."""
        return float(self.avar_lp[index, index]), float(self.avar_var[index, index])


def asym_moments(cm: CompanionModel, targets, alpha: LagPolynomial | None = None,
                 S: np.ndarray | None = None, check: bool = True) -> AsymptoticMoments:
    """Joint asymptotic covariance of LP and VAR estimators for ``targets``.

    ``S`` defaults to the stationary variance of the alpha = 0 process; the
    delta-method standard errors pass a sample second-moment matrix instead.
    If ``alpha`` is given the VAR asymptotic bias vector is filled in too.
    """
    targets = _as_targets(targets)
    if check:
        for t in targets:
            cm.check_target(t)
    S = stationary_variance(cm) if S is None else np.asarray(S, float)
    Sinv = np.linalg.inv(S)
    hmax = max(t.horizon for t in targets)
    P = cm.powers(hmax)
    Sigma, d = cm.Sigma, cm.shock_vars
    k = len(targets)
    psis = np.stack([psi_matrix(cm, t, P) for t in targets])
    # rows e_i' A^h for every target
    rows = np.stack([P[t.horizon][t.response] for t in targets])
    avar_lp = np.zeros((k, k))
    avar_var = np.zeros((k, k))
    for a, ta in enumerate(targets):
        for b in range(a, k):
            tb = targets[b]
            tr = np.sum((psis[a] @ Sigma @ psis[b].T) * Sinv.T)
            vlp = vvar = 0.0
            if ta.shock == tb.shock:
                j = ta.shock
                Hbar = cm.H[:, j + 1:]
                psi_ab = (rows[a] @ Hbar) @ ((Hbar.T @ rows[b]) * d[j + 1:])
                short = 0.0
                for lag in range(1, min(ta.horizon, tb.horizon) + 1):
                    short += P[ta.horizon - lag][ta.response] @ Sigma @ P[tb.horizon - lag][tb.response]
                vlp = (psi_ab + short) / d[j]
                vvar = psi_ab / d[j]
            avar_lp[a, b] = avar_lp[b, a] = vlp
            avar_var[a, b] = avar_var[b, a] = vvar + tr
    bias = None
    if alpha is not None:
        bias = np.array([_abias(cm, t, alpha, Sinv, P, psis[a]) for a, t in enumerate(targets)])
    return AsymptoticMoments(targets, avar_lp, avar_var, avar_var.copy(), psis, bias)


def _abias(cm, target, alpha, Sinv, P, psi) -> float:
    h, i, j = target.horizon, target.response, target.shock
    L = alpha.length
    if L == 0:
        return 0.0
    HD = cm.H * cm.shock_vars
    Pl = cm.powers(max(L - 1, h)) if P.shape[0] < max(L, h + 1) else P
    acc = np.zeros((cm.n, cm.n))
    for lag in range(1, L + 1):
        acc += cm.H @ alpha[lag] @ HD.T @ Pl[lag - 1].T
    first = np.trace(Sinv @ psi @ acc)
    second = 0.0
    for lag in range(1, min(h, L) + 1):
        second += (Pl[h - lag][i] @ cm.H) @ alpha[lag][:, j]
    return float(first - second)


def abias_var(cm: CompanionModel, target: IrfTarget, alpha: LagPolynomial,
              S: np.ndarray | None = None) -> float:
    """Asymptotic bias of the VAR estimator (scaled by T^{zeta})."""
    cm.check_target(target)
    S = stationary_variance(cm) if S is None else S
    P = cm.powers(target.horizon)
    return _abias(cm, target, alpha, np.linalg.inv(S), P, psi_matrix(cm, target, P))


# ------------------------------------------------------------ worst case

@dataclass(frozen=True)
class UpsilonSeries:
    """Truncated Xi_{a,l} matrices (l = 1..length) and the implied LP-VAR gap."""

    xi: np.ndarray  # (length, k, m, m)
    gap: np.ndarray
    tail_bound: float

    @property
    def length(self) -> int:
        return self.xi.shape[0]

    @property
    def upsilon(self) -> np.ndarray:
        """(length, k, m^2) stack; row a of block l is vec(Xi_{a,l})' (column-major vec)."""
        L, k, m, _ = self.xi.shape
        return np.swapaxes(self.xi, 2, 3).reshape(L, k, m * m)


def _geometric_tail_constant(A: np.ndarray, cap: int) -> float:
    """K with sum_{s>=L} ||A^s||_2^2 <= K ||A^L||_F^2 for every L."""
    n = A.shape[0]
    P = np.eye(n)
    norms_sq = []
    for q in range(1, cap + 1):
        norms_sq.append(np.linalg.norm(P, 2) ** 2)
        P = P @ A
        kappa = np.linalg.norm(P, 2)
        if kappa < 0.95:
            return sum(norms_sq) / (1.0 - kappa**2)
    raise NumericalError(f"||A^q|| did not fall below 0.95 within {cap} powers")


def upsilon_series(cm: CompanionModel, targets, tol: float = 1e-10,
                   max_lags: int = 20000, S: np.ndarray | None = None) -> UpsilonSeries:
    """Matrices whose Gram sum equals aVar(LP) - aVar(VAR), to within ``tol``.

    abias = sum_l Upsilon_l vec(alpha~_l') with alpha~_l = D^{-1/2} alpha_l D^{1/2}.
    The series is cut once the certified bound on sum_{l>L} ||Upsilon_l||^2
    (which bounds every entry of the neglected Gram tail) is below ``tol``.
    """
    targets = _as_targets(targets)
    for t in targets:
        cm.check_target(t)
    S = stationary_variance(cm) if S is None else S
    Sinv = np.linalg.inv(S)
    A, H, d = cm.A, cm.H, cm.shock_vars
    sq, isq = np.sqrt(d), 1.0 / np.sqrt(d)
    hmax = max(t.horizon for t in targets)
    P = cm.powers(hmax)
    left = (H * sq).T  # D^{1/2} H'
    # G_a = S^{-1} Psi_a H D^{1/2}
    G = np.stack([Sinv @ psi_matrix(cm, t, P) @ (H * sq) for t in targets])
    c_sq = np.linalg.norm(left, 2) ** 2 * float(np.sum(G**2))
    K = _geometric_tail_constant(A, max_lags)
    xis = []
    Apow = np.eye(cm.n)  # A^{l-1}
    tail = np.inf
    for lag in range(1, max_lags + 1):
        X = np.einsum("pn,kno->kpo", left @ Apow.T, G)
        for a, t in enumerate(targets):
            if lag <= t.horizon:
                j, i = t.shock, t.response
                X[a, j, :] -= isq[j] * (P[t.horizon - lag][i] @ H) * sq
        xis.append(X)
        Apow = Apow @ A
        if lag >= hmax:
            tail = c_sq * K * float(np.sum(Apow**2))
            if tail <= tol:
                break
    else:
        raise NumericalError(f"upsilon series did not converge: tail bound {tail:.3g} after {max_lags} lags")
    xi = np.stack(xis)
    U = np.swapaxes(xi, 2, 3).reshape(len(xis), len(targets), -1)
    gap = np.einsum("lka,lja->kj", U, U)
    return UpsilonSeries(xi, 0.5 * (gap + gap.T), tail)


def _top_direction(B: np.ndarray) -> tuple[float, np.ndarray]:
    w, V = np.linalg.eigh(0.5 * (B + B.T))
    v = V[:, -1]
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return float(w[-1]), v


def least_favorable(cm: CompanionModel, targets, M: float, R=None, tol: float = 1e-10,
                    series: UpsilonSeries | None = None) -> LagPolynomial:
    """Norm-M MA polynomial maximizing the (R-weighted) VAR bias.

    ``tol`` bounds the loss in attained bias from truncating the polynomial
    (relative to M).  Returned with the sign that makes the bias positive.
    """
    targets = _as_targets(targets)
    if M < 0:
        raise ModelError("M must be non-negative")
    if series is None:
        series = upsilon_series(cm, targets, tol=tol**2)
    m = cm.m
    if M == 0:
        return LagPolynomial.zero(m)
    Rm = np.eye(len(targets)) if R is None else np.atleast_2d(np.asarray(R, float))
    lam, v = _top_direction(Rm @ series.gap @ Rm.T)
    if lam <= GAP_ROUNDOFF * max(1.0, float(np.max(np.abs(np.diag(series.gap))))):
        return LagPolynomial.zero(m)
    w = Rm.T @ v
    # alpha~_l' = sum_a w_a Xi_{a,l}
    tilde_t = np.einsum("a,lapq->lpq", w, series.xi)
    scale = M / np.sqrt(np.sum(tilde_t**2))
    sq = np.sqrt(cm.shock_vars)
    alpha = scale * np.swapaxes(tilde_t, 1, 2) * sq[None, :, None] / sq[None, None, :]
    return LagPolynomial(alpha, m)


def worst_case_bias(moments: AsymptoticMoments, M: float, R=None):
    """Worst-case VAR bias over ||alpha|| <= M.

    Without ``R``: the standardized bias M sqrt(aVar_LP/aVar_VAR - 1) per
    target (float when there is one target).  With ``R``: the bias-norm
    bound M sqrt(lambda_max(R gap R')).
    """
    gap = moments.gap
    scale = max(1.0, float(np.max(np.abs(moments.avar_lp))))
    if np.linalg.eigvalsh(0.5 * (gap + gap.T))[0] < -PSD_TOL * scale:
        raise NumericalError("aVar(LP) - aVar(VAR) is not positive semidefinite")
    if R is None:
        dv = np.diag(moments.avar_var)
        if np.any(dv <= 0):
            raise ModelError("aVar(VAR) must be positive for the standardized worst-case bias")
        g = np.diag(gap)
        g = np.where(g > GAP_ROUNDOFF * scale, g, 0.0)
        b = M * np.sqrt(g / dv)
        return float(b[0]) if b.size == 1 else b
    Rm = np.atleast_2d(np.asarray(R, float))
    lam = np.linalg.eigvalsh(Rm @ (0.5 * (gap + gap.T)) @ Rm.T)[-1]
    if lam <= GAP_ROUNDOFF * scale * max(1.0, float(np.max(np.abs(Rm))) ** 2):
        return 0.0
    return float(M * np.sqrt(lam))


def wc_mse_regret(moments: AsymptoticMoments, M: float):
    """sup_alpha aMSE(VAR) - aMSE(LP) = (M^2 - 1)(aVar_LP - aVar_VAR)."""
    r = (M**2 - 1.0) * np.diag(moments.gap)
    return float(r[0]) if r.size == 1 else r


def sd_ratio(moments: AsymptoticMoments, index: int = 0) -> float:
    """sqrt(aVar_VAR / aVar_LP) for one target."""
    lp, var = moments.scalar(index)
    return float(np.sqrt(var / lp))


def ellipsoid_wc_coverage(moments: AsymptoticMoments, M: float, a: float = 0.1) -> float:
    """Worst-case coverage of the Wald ellipsoid centred at the VAR estimator."""
    V = 0.5 * (moments.avar_var + moments.avar_var.T)
    w, U = np.linalg.eigh(V)
    if w[0] <= 0:
        raise ModelError("aVar(VAR) must be non-singular")
    half = (U / np.sqrt(w)) @ U.T  # V^{-1/2}
    lam = np.linalg.eigvalsh(half @ moments.avar_lp @ half)[-1]
    k = moments.k
    nc = M**2 * max(lam - 1.0, 0.0)
    return ncx2_cdf(scipy.stats.chi2.ppf(1 - a, k), k, nc)


@dataclass(frozen=True)
class WorstCase:
    M: float
    bias: float
    alpha_star: LagPolynomial
    coverage: float
    truncation_len: int
    tail_bound: float
    note: str = ""


def worst_case(cm: CompanionModel, targets, M: float, a: float = 0.1, R=None,
               tol: float = 1e-10) -> WorstCase:
    """Bundle of the minimax quantities for one target (or a weighted vector).

    For a single target ``bias`` is the unstandardized M sqrt(gap) and
    ``coverage`` the worst-case coverage of the conventional VAR interval;
    for several targets ``coverage`` refers to the Wald ellipsoid.
    """
    targets = _as_targets(targets)
    series = upsilon_series(cm, targets, tol=tol**2)
    mom = asym_moments(cm, targets)
    alpha = least_favorable(cm, targets, M, R=R, tol=tol, series=series)
    bias = worst_case_bias(mom, M, R=np.eye(len(targets)) if R is None else R)
    note = "" if alpha.length or M == 0 else "no adversarial direction: LP and VAR variances coincide"
    if len(targets) == 1 and R is None:
        lp, var = mom.scalar()
        cov = 1.0 - float(coverage_r(bias / np.sqrt(var), z_crit(a))) if var > 0 else float("nan")
    else:
        cov = ellipsoid_wc_coverage(mom, M, a)
    return WorstCase(float(M), bias, alpha, cov, series.length, series.tail_bound, note)


def long_lag_gap(cm: CompanionModel, target: IrfTarget) -> float:
    """aVar(LP) - aVar(VAR) for one target."""
    mom = asym_moments(cm, target)
    return float(mom.gap[0, 0])
