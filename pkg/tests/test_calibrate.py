import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from agetb.calibrate import (CaseRow, CaseSeries, FitConfig, fit, fit_quality, holdout_check,
                             nelder_mead, predict_cases, r_squared)
from agetb.errors import DataGap, DegenerateSeries, ModelError
from agetb.model import preset, with_param

TRUE = {"beta1": 1.325e-4, "beta2": 7.402e-5, "beta3": 4.690e-4, "omega": 0.728}


@pytest.fixture(scope="module")
def synthetic():
    """Noise-free per-group series generated by the varying-N preset."""
    p = preset("varying_n")
    pred = predict_cases(p, 2005, 2021, dt=1e-2)
    rows = [CaseRow(y, tuple(pred[k]) if y <= 2018 else None, float(pred[k].sum()))
            for k, y in enumerate(range(2005, 2022))]
    return CaseSeries(tuple(rows))


# -- R^2 -----------------------------------------------------------------------


def test_r2_trivial_cases():
    y = np.array([3.0, 1.0, 4.0, 1.0, 5.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full_like(y, y.mean())) == pytest.approx(0.0, abs=1e-15)
    assert r_squared([1, 2], [2, 1]) == pytest.approx(-3.0)


def test_r2_degenerate():
    with pytest.raises(DegenerateSeries):
        r_squared([2, 2, 2], [1, 2, 3])
    with pytest.raises(DegenerateSeries):
        r_squared([1], [1])
    with pytest.raises(DegenerateSeries):
        r_squared([1, 2], [1, 2, 3])


@given(st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=30), st.floats(-1e3, 1e3))
def test_r2_at_most_one(values, shift):
    y = np.array(values)
    if np.ptp(y) < 1e-3:
        return
    pred = y[::-1] + shift
    assert r_squared(y, pred) <= 1.0


# -- Nelder-Mead ---------------------------------------------------------------


def test_nelder_mead_quadratic():
    target = np.array([0.3, 2.0])
    res = nelder_mead(lambda x: float(np.sum((x - target) ** 2)) + 1.0, [1.0, 1.0], [0, 0], [5, 5],
                      ftol_rel=1e-12, xtol_rel=1e-8)
    assert res.converged
    np.testing.assert_allclose(res.x, target, atol=1e-5)
    assert np.all(np.diff(res.trace) <= 0)


def test_nelder_mead_respects_bounds():
    res = nelder_mead(lambda x: float((x[0] + 3) ** 2), [1.0], [0.0], [2.0])
    assert 0.0 <= res.x[0] <= 2.0
    assert res.x[0] == pytest.approx(0.0, abs=1e-6)


def test_nelder_mead_zero_budget():
    res = nelder_mead(lambda x: 0.0, [0.5, 0.5], [0, 0], [1, 1], max_evals=0)
    assert not res.converged and res.evals == 0
    np.testing.assert_array_equal(res.x, [0.5, 0.5])


def test_nelder_mead_budget_exhausted():
    res = nelder_mead(lambda x: float(np.sum((x - 0.123) ** 2)), [1.0, 1.0], [0, 0], [2, 2], max_evals=10)
    assert not res.converged
    assert res.evals <= 10


def test_nelder_mead_survives_nonfinite():
    res = nelder_mead(lambda x: math.nan if x[0] > 1.5 else float((x[0] - 1) ** 2), [1.4], [0], [3])
    assert res.x[0] == pytest.approx(1.0, abs=1e-3)


# -- data access ---------------------------------------------------------------


def test_case_series_checks(cases):
    assert cases.row(2004).groups == (24247, 688080, 257952)
    assert cases.row(2021).groups is None and cases.row(2021).total == 639548
    with pytest.raises(DataGap):
        cases.group_matrix(2017, 2019)
    with pytest.raises(DataGap):
        cases.row(2030)
    with pytest.raises(ModelError):
        CaseSeries((CaseRow(2005, None, 1.0), CaseRow(2005, None, 2.0)))


# -- fitting -------------------------------------------------------------------


def test_zero_budget_returns_start(cases, varying):
    res = fit(cases, varying, FitConfig(max_evals=0))
    assert not res.converged
    assert res.fitted == pytest.approx(TRUE)


def test_synthetic_recovery(synthetic, varying):
    start = {"beta1": 1.2 * TRUE["beta1"], "beta2": 0.85 * TRUE["beta2"],
             "beta3": 1.15 * TRUE["beta3"], "omega": 0.6}
    res = fit(synthetic, varying, FitConfig(cycles=3), start=start)
    for k in ("beta1", "beta2", "beta3"):
        assert res.fitted[k] == pytest.approx(TRUE[k], rel=0.05), k
    assert abs(res.fitted["omega"] - TRUE["omega"]) <= 0.05
    assert res.r2 > 0.99
    errors = holdout_check(res, synthetic)
    assert max(errors.values()) < 0.01


def test_fixed_point_at_truth(synthetic, varying):
    res = fit(synthetic, varying, FitConfig())
    for k, v in res.fitted.items():
        assert v == pytest.approx(TRUE[k], rel=1e-3), k
    assert res.converged
    for stage in res.stages:
        assert stage.diameter <= FitConfig().xtol_rel


def test_fit_trace_monotone_and_bounded(cases, varying):
    res = fit(cases, varying, FitConfig(max_evals=150))
    for stage in res.stages:
        assert np.all(np.diff(stage.trace) <= 0)
    f = res.fitted
    assert 0 <= f["omega"] <= 1
    assert all(1e-8 <= f[k] <= 1e-2 for k in ("beta1", "beta2", "beta3"))
    assert res.residuals.shape == (14, 3)
    np.testing.assert_allclose(res.residuals, res.observed - res.predicted)


def test_fit_needs_group_data(cases, varying):
    with pytest.raises(DataGap):
        fit(cases, varying, FitConfig(years=(2015, 2020)))


def test_holdout_perfect_data(synthetic, varying):
    res = fit(synthetic, varying, FitConfig(max_evals=0))
    assert max(holdout_check(res, synthetic).values()) < 1e-12


def test_constant_predictor_baseline(cases):
    # relative error of carrying the 2018 total forward
    last = cases.row(2018).total
    errors = {y: abs(last - cases.row(y).total) / cases.row(y).total for y in (2019, 2020, 2021)}
    assert errors == pytest.approx({2019: 0.0613305, 2020: 0.2278827, 2021: 0.2873811}, rel=1e-5)


def test_prevalence_measure_constant_regime(cases, constant):
    # With the alternative prevalence measure the published constant-N parameters
    # give R^2 = 0.904 without any refitting.
    assert fit_quality(constant, cases, measure="prevalence") == pytest.approx(0.904, abs=0.005)


def test_predict_cases_uses_preset(varying):
    pred = predict_cases(varying, 2005, 2006, dt=1e-2)
    assert pred.shape == (2, 3) and np.all(pred > 0)
    other = predict_cases(with_param(varying, "beta3", 1e-3), 2005, 2006, dt=1e-2)
    assert other[1, 2] > pred[1, 2]
