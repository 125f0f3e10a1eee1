import numpy as np
import pytest

from conftest import random_model
from lpvar.bootstrap import (
    _draw_rng,
    bootstrap_intervals,
    bootstrap_lp_ci,
    bootstrap_var_ci,
    residual_bootstrap,
)
from lpvar.errors import EstimationError, ModelError
from lpvar.estimate import var_design, var_fit
from lpvar.model import IrfTarget, LocalModel, build_companion, true_irf
from lpvar.simulate import simulate_replication


def _loop_path(Y, fit, seed, b):
    """One pseudo-sample built with a plain loop, as an independent oracle."""
    p = fit.p
    T, k = Y.shape
    resid = fit.resid - fit.resid.mean(axis=0)
    idx = _draw_rng(seed, b, 0).integers(0, T - p, size=T - p)
    lags = fit.lag_matrices()
    out = np.array(Y[:p], dtype=float).tolist()
    for t in range(p, T):
        y = fit.intercept.copy()
        for l in range(p):
            y = y + lags[l] @ np.asarray(out[t - 1 - l])
        out.append(y + resid[idx[t - p]])
    return np.array(out)


def test_paths_match_loop_oracle(rng):
    m = random_model(rng, k=2, p=2)
    Y = simulate_replication(m, 120, 3, 0)
    fit = var_fit(Y, 2)
    bs = residual_bootstrap(Y, 2, B=5, seed=11, fit=fit)
    for b in range(5):
        np.testing.assert_allclose(bs.paths[b], _loop_path(Y, fit, 11, b), atol=1e-12)
        Yt, X = var_design(bs.paths[b], 2)
        ref = np.linalg.lstsq(X, Yt, rcond=None)[0]
        np.testing.assert_allclose(bs.var_coef[b], ref, atol=1e-10)
    assert bs.redraws == 0


def test_deterministic_and_seed_sensitive():
    Y = simulate_replication(LocalModel.ar1(0.5), 200, 1, 0)
    a = bootstrap_intervals(Y, 0, 0, [1, 3], 1, B=150, seed=4)
    b = bootstrap_intervals(Y, 0, 0, [1, 3], 1, B=150, seed=4)
    c = bootstrap_intervals(Y, 0, 0, [1, 3], 1, B=150, seed=5)
    assert a == b
    assert a != c


def test_draws_do_not_depend_on_batch_size():
    # draw b uses stream (seed, b): the first draws agree whatever B is
    Y = simulate_replication(LocalModel.ar1(0.5), 150, 2, 0)
    small = residual_bootstrap(Y, 1, B=10, seed=9)
    large = residual_bootstrap(Y, 1, B=40, seed=9)
    np.testing.assert_array_equal(small.paths, large.paths[:10])


def test_intervals_contain_point_and_order():
    Y = simulate_replication(LocalModel.ar1(0.6), 300, 7, 0)
    out = bootstrap_intervals(Y, 0, 0, [0, 1, 2, 4], 1, B=300, seed=1)
    fit = var_fit(Y, 1)
    for c, h in enumerate([1, 2, 4], start=1):
        lo, hi = out["VAR"][c]
        assert lo < hi
        assert lo <= fit.irf(IrfTarget(0, 0, h)) <= hi
        lo, hi = out["LP"][c]
        assert lo < hi
    # impact response is the normalization 1 in every pseudo-sample
    assert out["VAR"][0] == pytest.approx((1.0, 1.0))


def test_single_target_wrappers_agree():
    Y = simulate_replication(LocalModel.ar1(0.5), 200, 3, 0)
    t = IrfTarget(0, 0, 2)
    both = bootstrap_intervals(Y, 0, 0, [2], 1, B=200, seed=6)
    assert bootstrap_var_ci(Y, t, 1, B=200, seed=6) == both["VAR"][0]
    assert bootstrap_lp_ci(Y, t, 1, B=200, seed=6) == both["LP"][0]
    with pytest.raises(ModelError):
        bootstrap_var_ci(Y, t, 1, B=99)
    with pytest.raises(ModelError):
        bootstrap_lp_ci(Y, t, 1, B=50)


def test_degenerate_residuals_collapse():
    # a noiseless AR(1) path: the VAR fits exactly, every interval is the point
    y = 0.5 ** np.arange(60)[:, None] + 1.0
    fit = var_fit(y, 1)
    out = bootstrap_intervals(y, 0, 0, [1, 2], 1, B=100, seed=0, methods=("VAR",))
    for h, (lo, hi) in zip([1, 2], out["VAR"]):
        assert lo == hi == fit.irf(IrfTarget(0, 0, h))
    # the LP regressors are exactly collinear on such a path
    with pytest.raises(EstimationError, match="collinear"):
        bootstrap_lp_ci(y, IrfTarget(0, 0, 1), 1, B=100)


def test_explosive_estimate_refused():
    rng = np.random.default_rng(0)
    y = np.cumsum(1.0 + rng.normal(scale=0.01, size=200))[:, None] * 1.02 ** np.arange(200)[:, None]
    with pytest.raises(EstimationError, match="explosive"):
        residual_bootstrap(y, 1, B=10, seed=0)


@pytest.mark.slow
def test_coverage_under_correct_specification():
    m = LocalModel.ar1(0.5)
    t = IrfTarget(0, 0, 2)
    truth = true_irf(build_companion(m), t, 240)
    R = 1000
    hits = {"VAR": 0, "LP": 0}
    for r in range(R):
        Y = simulate_replication(m, 240, 31, r)
        out = bootstrap_intervals(Y, 0, 0, [2], 1, B=199, seed=r)
        for k in hits:
            lo, hi = out[k][0]
            hits[k] += lo <= truth <= hi
    for k in hits:
        assert 0.87 <= hits[k] / R <= 0.93, (k, hits[k] / R)
