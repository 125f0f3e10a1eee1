import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_model
from lpvar.asymptotics import asym_moments
from lpvar.coverage import z_crit
from lpvar.errors import EstimationError, ModelError
from lpvar.estimate import (
    EstimateResult,
    hausman,
    lp_design,
    lp_estimate,
    ols,
    select_lag_ic,
    var_design,
    var_estimate,
    var_fit,
)
from lpvar.model import IrfTarget, LocalModel, build_companion, true_irf
from lpvar.simulate import SimSpec, simulate_path, simulate_replication


def test_ols_mean_and_exact_fit(rng):
    y = rng.normal(size=50)
    fit = ols(y, np.ones((50, 1)))
    assert fit.coef[0, 0] == pytest.approx(y.mean())
    X = rng.normal(size=(40, 3))
    b = np.array([1.0, -2.0, 0.5])
    fit = ols(X @ b, X)
    np.testing.assert_allclose(fit.coef[:, 0], b, rtol=1e-12)
    assert np.max(np.abs(fit.resid)) < 1e-12


def test_ols_normal_equations(rng):
    X = rng.normal(size=(200, 5))
    Y = rng.normal(size=(200, 2))
    fit = ols(Y, X)
    assert np.linalg.norm(X.T @ fit.resid) <= 1e-8 * np.linalg.norm(X) * np.linalg.norm(Y)
    ref = np.linalg.lstsq(X, Y, rcond=None)[0]
    np.testing.assert_allclose(fit.coef, ref, rtol=1e-10)
    np.testing.assert_allclose(fit.xtx_inv, np.linalg.inv(X.T @ X), rtol=1e-10)


def test_ols_rank_deficiency_names_columns(rng):
    X = rng.normal(size=(30, 3))
    X = np.column_stack([X, X[:, 0] + X[:, 1]])
    with pytest.raises(EstimationError, match="collinear"):
        ols(rng.normal(size=30), X, names=["a", "b", "c", "d"])


def _data(model, T, seed):
    return simulate_path(SimSpec(model, T, seed)).values


def test_impact_equality(rng):
    for s in range(20):
        m = random_model(rng, k=3, p=int(rng.integers(1, 3)))
        Y = _data(m, 150, s)
        for i in range(3):
            for j in range(3):
                for p in (1, 2):
                    t = IrfTarget(i, j, 0)
                    assert abs(lp_estimate(Y, t, p).point - var_estimate(Y, t, p).point) <= 1e-10


def test_var_impact_normalization(bivariate):
    Y = _data(bivariate, 200, 1)
    assert var_estimate(Y, IrfTarget(1, 1, 0), 2).point == 1.0
    assert var_estimate(Y, IrfTarget(0, 1, 0), 2).point == 0.0


def test_consistency_large_sample(bivariate):
    T = 20_000
    Y = _data(bivariate, T, 3)
    cm = build_companion(bivariate)
    for h in (1, 2, 4):
        t = IrfTarget(1, 0, h)
        truth = true_irf(cm, t, T)
        lp, var = lp_estimate(Y, t, 1), var_estimate(Y, t, 1)
        assert abs(lp.point - truth) < 4 * lp.se
        assert abs(var.point - truth) < 4 * var.se
        if h >= 2:
            assert var.se <= lp.se * 1.1


def test_white_noise_lp():
    m = LocalModel(np.zeros((1, 1, 1)), [[1.0]], [1.0])
    Y = _data(m, 2000, 5)
    r = lp_estimate(Y, IrfTarget(0, 0, 3), 2)
    assert abs(r.point) < 4 * r.se
    lo, hi = r.ci
    assert lo <= r.point <= hi
    assert hi - lo == pytest.approx(2 * z_crit(0.1) * r.se)


def test_lp_frisch_waugh_invariance(rng):
    m = random_model(rng, k=2, p=2)
    Y = _data(m, 400, 2)
    t = IrfTarget(1, 0, 3)
    base = lp_estimate(Y, t, 2)
    # the same regression with the lagged control block mixed by an invertible matrix
    y, X = lp_design(Y, t, 2)
    # columns: shock variable, intercept, then the 2 x 2 lag block
    assert X.shape[1] == 6
    G = rng.normal(size=(4, 4)) + 3 * np.eye(4)
    X2 = X.copy()
    X2[:, 2:] = X[:, 2:] @ G
    fit = ols(y, X2)
    assert fit.coef[0, 0] == pytest.approx(base.point, abs=1e-10)
    assert np.sqrt(fit.cov()[0, 0]) == pytest.approx(base.se, abs=1e-10)


def test_insufficient_sample():
    m = LocalModel.ar1(0.5)
    Y = _data(m, 12, 1)
    with pytest.raises(EstimationError, match="usable observations"):
        lp_estimate(Y, IrfTarget(0, 0, 5), 3)
    with pytest.raises(ModelError):
        lp_estimate(Y, IrfTarget(2, 0, 1), 1)
    with pytest.raises(ModelError):
        var_estimate(Y, IrfTarget(0, 0, 1), 0)


def test_var_plug_in_matches_population_formula(bivariate):
    # with the population second moments plugged in, se^2 * T_eff equals the aVar formula
    Y = _data(bivariate, 5000, 8)
    fit = var_fit(Y, 1)
    r = var_estimate(Y, IrfTarget(1, 0, 3), 1)
    assert r.aux["avar"] == pytest.approx(r.se**2 * fit.nobs)
    pop = asym_moments(build_companion(bivariate), IrfTarget(1, 0, 3)).avar_var[0, 0]
    assert r.aux["avar"] == pytest.approx(pop, rel=0.15)


# ---------------------------------------------------------------- lag choice

def test_ic_hand_computation():
    Y = np.array([[0.3], [-1.2], [0.8], [0.1], [1.5]])
    sel = select_lag_ic(Y, 1, "aic")
    T_eff = 4
    y0 = Y[1:, 0] - Y[1:, 0].mean()
    v0 = np.log(np.mean(y0**2))
    Yt, X = var_design(Y, 1)
    b = np.linalg.lstsq(X, Yt, rcond=None)[0]
    e = Yt - X @ b
    v1 = np.log(np.mean(e**2)) + 2.0 / T_eff
    assert sel.values[0] == pytest.approx(v0)
    assert sel.values[1] == pytest.approx(v1)
    assert sel.penalty == pytest.approx(2.0 / T_eff)
    sel_b = select_lag_ic(Y, 1, "bic")
    assert sel_b.penalty == pytest.approx(np.log(T_eff) / T_eff)
    assert select_lag_ic(Y, 1, 0.25).rule == "custom"


def test_ic_logdet_nonincreasing(rng):
    m = random_model(rng, k=2, p=2)
    Y = _data(m, 300, 4)
    sel = select_lag_ic(Y, 6, 0.0)
    vals = [sel.values[p] for p in range(7)]
    assert np.all(np.diff(vals) <= 1e-12)


def test_ic_ties_go_to_smaller_lag():
    Y = np.random.default_rng(0).normal(size=(100, 1))
    sel = select_lag_ic(Y, 3, -1e6)
    assert sel.selected == 3
    sel = select_lag_ic(Y, 3, 1e6)
    assert sel.selected == 0


def test_bic_consistency():
    wn = LocalModel(np.zeros((1, 1, 1)), [[1.0]], [1.0])
    ar = LocalModel.ar1(0.9)
    picks_wn = [select_lag_ic(simulate_replication(wn, 2000, 1, r), 6, "bic").selected for r in range(200)]
    picks_ar = [select_lag_ic(simulate_replication(ar, 2000, 2, r), 6, "bic").selected for r in range(200)]
    assert np.mean(np.array(picks_wn) == 0) >= 0.95
    assert np.mean(np.array(picks_ar) >= 1) >= 0.99


# ---------------------------------------------------------------- Hausman

def _result(method, point, se):
    return EstimateResult(method, IrfTarget(0, 0, 2), point, se, (point - se, point + se), 1)


def test_hausman_basic():
    h = hausman(_result("LP", 0.4, 0.2), _result("VAR", 0.4, 0.1))
    assert h.statistic == 0 and not h.reject
    h = hausman(_result("LP", 1.0, 0.2), _result("VAR", 0.0, 0.1))
    assert h.statistic == pytest.approx(1.0 / np.sqrt(0.03))
    assert h.reject
    h = hausman(_result("LP", 1.0, 0.2), _result("VAR", 0.0, 0.1), avar_lp=4.0, avar_var=1.0, T=100)
    assert h.statistic == pytest.approx(10 / np.sqrt(3))


def test_hausman_inapplicable():
    with pytest.raises(EstimationError, match="inapplicable"):
        hausman(_result("LP", 1.0, 0.1), _result("VAR", 0.0, 0.2))
    with pytest.raises(EstimationError, match="inapplicable"):
        hausman(_result("LP", 1.0, 0.0), _result("VAR", 1.0, 0.0))


def test_hausman_size_under_correct_specification():
    m = LocalModel.ar1(0.5)
    rejects = []
    R = 2000
    for r in range(R):
        Y = simulate_replication(m, 500, 17, r)
        t = IrfTarget(0, 0, 3)
        rejects.append(hausman(lp_estimate(Y, t, 1), var_estimate(Y, t, 1)).reject)
    freq = np.mean(rejects)
    se = np.sqrt(0.1 * 0.9 / R)
    assert abs(freq - 0.1) <= 2 * se


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_hausman_statistic_nonnegative(seed):
    r = np.random.default_rng(seed)
    a, b = r.normal(size=2)
    s = hausman(_result("LP", a, 0.5), _result("VAR", b, 0.3)).statistic
    assert s >= 0
