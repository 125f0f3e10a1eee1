"""Scalar coverage, length and weighting functionals of the worst-case analysis.

All functions take the relative standard deviation ``sd_ratio`` =
sqrt(aVar_VAR / aVar_LP) in (0, 1] and a misspecification bound M.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.optimize
import scipy.special

_GOLDEN_TOL = 1e-8


def z_crit(a: float) -> float:
    """Two-sided normal critical value z_{1-a/2}."""
    return float(scipy.special.ndtri(1.0 - a / 2.0))


def coverage_r(b, c):
    """r(b; c) = P(|Z + b| > c) = Phi(-c - b) + Phi(-c + b)."""
    b = np.abs(np.asarray(b, dtype=float))
    out = scipy.special.ndtr(-c - b) + scipy.special.ndtr(b - c)
    return float(out) if out.ndim == 0 else out


def var_ci_coverage(b, a: float = 0.1):
    """Asymptotic coverage of the conventional VAR interval with standardized bias b."""
    return 1.0 - coverage_r(b, z_crit(a))


def _tau(sd_ratio: float) -> float:
    if not 0 < sd_ratio <= 1:
        raise ValueError(f"sd_ratio must lie in (0, 1], got {sd_ratio}")
    return math.sqrt(max(1.0 / sd_ratio**2 - 1.0, 0.0))


def worst_case_coverage(sd_ratio: float, M: float, a: float = 0.1) -> float:
    """inf over ||alpha|| <= M of the VAR interval's asymptotic coverage."""
    return 1.0 - coverage_r(M * _tau(sd_ratio), z_crit(a))


def hausman_rejection(b: float, sd_ratio: float, a: float = 0.1) -> float:
    """Asymptotic Hausman rejection probability given standardized VAR bias b."""
    return coverage_r(b / _tau(sd_ratio), z_crit(a))


def worst_case_joint(sd_ratio: float, a: float = 0.1, grid: int = 4001) -> float:
    """sup_b P(VAR interval misses and the Hausman test does not reject)."""
    if not 0 < sd_ratio < 1:
        raise ValueError(f"sd_ratio must lie in (0, 1), got {sd_ratio}")
    z = z_crit(a)
    tau = _tau(sd_ratio)

    def f(b):
        return coverage_r(b, z) * (1.0 - coverage_r(b / tau, z))

    # beyond this, 1 - r(b/tau) is below 1e-20
    bmax = (tau + 1.0) * (z + 10.0)
    bs = np.linspace(0.0, bmax, grid)
    vals = f(bs)
    k = int(np.argmax(vals))
    lo, hi = bs[max(k - 1, 0)], bs[min(k + 1, grid - 1)]
    res = scipy.optimize.minimize_scalar(lambda b: -f(b), bounds=(lo, hi), method="bounded",
                                         options={"xatol": 1e-12})
    return float(max(vals[k], -res.fun, f(0.0)))


def bias_aware_cv(b: float, a: float = 0.1) -> float:
    """Critical value cv with r(b; cv) = a."""
    b = abs(float(b))
    z = z_crit(a)
    # for tiny b, r(b; z) - a is zero up to rounding
    if b == 0 or coverage_r(b, z) <= a:
        return z
    cv = scipy.optimize.brentq(lambda c: coverage_r(b, c) - a, z, b + z + 1.0,
                               xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(cv)


def rel_length(sd_ratio: float, M: float, omega: float = 0.0, a: float = 0.1) -> float:
    """Length of the bias-aware interval at weight omega relative to the LP interval."""
    tau = _tau(sd_ratio)
    spread = math.sqrt(1.0 + omega**2 * tau**2)
    cv = bias_aware_cv((1.0 - omega) * M * tau / spread, a)
    return cv * spread * sd_ratio / z_crit(a)


def _scalar_avars(moments) -> tuple[float, float]:
    if hasattr(moments, "scalar"):
        return moments.scalar()
    lp, var = moments
    return float(lp), float(var)


def bias_aware_ci(point_lp: float, point_var: float, moments, M: float, omega: float = 0.0,
                  a: float = 0.1, T: float = 1.0) -> tuple[float, float]:
    """Bias-aware interval centred at omega*LP + (1-omega)*VAR.

    ``moments`` is an AsymptoticMoments (first target used) or a pair
    (aVar_LP, aVar_VAR).
    """
    if not 0 <= omega <= 1:
        raise ValueError("omega must lie in [0, 1]")
    avar_lp, avar_var = _scalar_avars(moments)
    if avar_var <= 0:
        raise ValueError("aVar(VAR) must be positive")
    tau = math.sqrt(max(avar_lp / avar_var - 1.0, 0.0))
    spread = math.sqrt(1.0 + omega**2 * tau**2)
    half = bias_aware_cv((1.0 - omega) * M * tau / spread, a) * math.sqrt(spread**2 * avar_var / T)
    centre = omega * point_lp + (1.0 - omega) * point_var
    return centre - half, centre + half


def optimal_weight_mse(M: float) -> float:
    """Minimax-MSE weight on LP in the LP/VAR average."""
    return M**2 / (1.0 + M**2)


def optimal_weight_length(M: float, sd_ratio: float, a: float = 0.1) -> float:
    """Weight on LP minimizing the bias-aware interval length."""
    tau = _tau(sd_ratio)

    def length(w):
        spread = math.sqrt(1.0 + w**2 * tau**2)
        return bias_aware_cv((1.0 - w) * M * tau / spread, a) * spread

    res = scipy.optimize.minimize_scalar(length, bounds=(0.0, 1.0), method="bounded",
                                         options={"xatol": _GOLDEN_TOL})
    # endpoints win ties so degenerate cases (M = 0, tau = 0) return exactly 0
    cands = [(length(0.0), 0.0), (length(1.0), 1.0), (float(res.fun), float(res.x))]
    best = min(c[0] for c in cands)
    for val, w in cands:
        if val <= best + 1e-12:
            return w
    return float(res.x)


def ncx2_cdf(x: float, k: int, nc: float, rtol: float = 1e-13) -> float:
    """CDF of a noncentral chi-square(k, nc) as a Poisson mixture of central CDFs.

    Summation runs outward from the Poisson mode; each direction stops once a
    geometric bound on the remaining terms falls below ``rtol`` times the sum.
    """
    if x <= 0:
        return 0.0
    if nc < 0:
        raise ValueError("noncentrality must be non-negative")
    if nc == 0:
        return float(scipy.special.gammainc(k / 2.0, x / 2.0))
    mu = nc / 2.0
    j0 = int(math.floor(mu))

    def term(j):
        logw = -mu + j * math.log(mu) - math.lgamma(j + 1)
        return math.exp(logw), float(scipy.special.gammainc(k / 2.0 + j, x / 2.0))

    w0, p0 = term(j0)
    total = w0 * p0
    j = j0
    while True:
        j += 1
        w, p = term(j)
        total += w * p
        ratio = mu / (j + 1)
        # later terms: weights shrink by <= ratio each step, central CDFs decrease in j
        if ratio < 1 and w * p * ratio / (1 - ratio) <= rtol * max(total, 1e-300):
            break
        if w * p == 0 and j > j0 + 10:
            break
    j = j0
    while j > 0:
        j -= 1
        w, p = term(j)
        total += w * p
        # earlier terms: weights shrink by <= j/mu per step, central CDFs <= 1
        ratio = j / mu
        if w * ratio / (1 - ratio) <= rtol * max(total, 1e-300):
            break
    return float(min(max(total, 0.0), 1.0))
