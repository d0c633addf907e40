import numpy as np
import pytest

from models.config import FitConfig, ScaleConvention
from models.errors import InputError
from services.bases import basis_apply
from services.estimators import (
    cross_validate,
    detect_knots,
    fit_locally_adaptive_spline,
    fit_trend_filter,
    fit_trend_filter_path,
    local_spline_lambda_max,
    refit_regression_spline,
    tune_local_spline_to_df,
    tune_to_df,
)
from services.simbench import gen_doppler, gen_hills
from services.solvers.pdip import lambda_max
from services.solvers.taut_string import solve_tf_tautstring


# ----------------------------------------------------------------------
# Fixed lambda
# ----------------------------------------------------------------------

@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_polynomial_limit_has_no_knots(k, noisy_signal):
    fit = fit_trend_filter(noisy_signal, k, 1.01 * lambda_max(noisy_signal, k))
    assert fit.knots.size == 0
    assert fit.df_estimate == k + 1


def test_zero_lambda_saturates(rng):
    y = rng.standard_normal(25)
    fit = fit_trend_filter(y, 1, 0.0)
    np.testing.assert_array_equal(fit.beta, y)
    assert fit.df_estimate == 25


def test_constant_order_knots_match_exact_solver(rng):
    y = np.repeat(rng.standard_normal(5), 20) + 0.3 * rng.standard_normal(100)
    lam = 0.5
    fit = fit_trend_filter(y, 0, lam)
    exact = solve_tf_tautstring(y, lam)
    np.testing.assert_array_equal(fit.knots, detect_knots(exact, y, 0, FitConfig().knot_tol))


def test_polished_knots_are_the_active_set():
    y = gen_doppler(1000, seed=0).y
    fit = tune_to_df(y, 3, 50)
    assert fit.diagnostics.polished
    lam_eff = fit.lam * 1000**3 / 6
    active = np.flatnonzero(np.abs(fit.dual) >= lam_eff * (1 - 1e-12))
    np.testing.assert_array_equal(fit.knots, active)
    assert fit.df_estimate == active.size + 4
    free = np.setdiff1d(np.arange(y.size - 4), active)
    assert np.max(np.abs(np.diff(fit.beta, n=4)[free])) <= 1e-10 * np.max(np.abs(np.diff(y, n=4)))


def test_small_kinks_count_without_a_polished_active_set(grid):
    x = grid(50)
    beta = 3 * x + 1e-3 * np.maximum(x - 0.5, 0.0)
    y = beta + np.where(np.arange(50) % 2, 100.0, -100.0)
    np.testing.assert_array_equal(detect_knots(beta, y, 1, 1e-5), [23])
    assert detect_knots(3 * x + 1.0, y, 1, 1e-5).size == 0


def test_fit_summary_and_coefficients(noisy_signal):
    fit = fit_trend_filter(noisy_signal, 1, 0.05 * lambda_max(noisy_signal, 1))
    summary = fit.summary()
    assert summary["schema_version"] == 1
    assert summary["df"] == fit.df_estimate
    assert summary["knots"] == [int(i) + 1 for i in fit.knots]
    assert summary["scale"] == ScaleConvention.GRID_SCALED.value
    np.testing.assert_allclose(basis_apply(fit.coeffs_alpha, 1), fit.beta, atol=1e-9)


def test_scale_conventions_agree(noisy_signal):
    k, n = 2, noisy_signal.size
    scaled = fit_trend_filter(noisy_signal, k, 0.01)
    raw = fit_trend_filter(noisy_signal, k, 0.01 * n**k / 2, FitConfig(scale=ScaleConvention.RAW))
    np.testing.assert_allclose(scaled.beta, raw.beta, atol=1e-8)


def test_path_matches_single_fits(noisy_signal):
    top = lambda_max(noisy_signal, 2)
    grid = [0.5 * top, 0.01 * top]
    for lam, fit in zip(grid, fit_trend_filter_path(noisy_signal, 2, grid)):
        assert fit.lam == lam
        np.testing.assert_allclose(fit.beta, fit_trend_filter(noisy_signal, 2, lam).beta, atol=1e-6)


def test_trend_filtering_is_not_linear(noisy_signal):
    lam = 0.1 * lambda_max(noisy_signal, 1)
    single = fit_trend_filter(noisy_signal, 1, lam).beta
    double = fit_trend_filter(2 * noisy_signal, 1, lam).beta
    assert np.max(np.abs(double - 2 * single)) > 1e-3


# ----------------------------------------------------------------------
# df tuning
# ----------------------------------------------------------------------

def test_tune_to_df_on_hills():
    data = gen_hills(128, seed=3)
    fit = tune_to_df(data.y, 3, 19)
    assert abs(fit.df_estimate - 19) <= 1
    if fit.warning is None:
        assert fit.knots.size == 15


@pytest.mark.parametrize("seed", range(20))
def test_tune_to_polynomial_df_gives_no_knots(seed):
    rng = np.random.default_rng(seed)
    k = seed % 4
    y = rng.standard_normal(40)
    fit = tune_to_df(y, k, k + 1)
    assert fit.knots.size == 0
    assert fit.lam == pytest.approx(lambda_max(y, k))


def test_tune_to_saturated_df(rng):
    y = rng.standard_normal(30)
    fit = tune_to_df(y, 1, 30)
    assert fit.lam == 0.0
    assert fit.df_estimate == 30


@pytest.mark.parametrize("target", [1, 41])
def test_tune_target_out_of_range(target, rng):
    with pytest.raises(InputError):
        tune_to_df(rng.standard_normal(40), 1, target)


def test_unreachable_target_sets_warning(rng):
    y = rng.standard_normal(40)
    cfg = FitConfig(tune_max_iter=1)
    fit = tune_to_df(y, 1, 20, cfg)
    if fit.df_estimate != 20:
        assert fit.warning is not None and "20" in fit.warning


# ----------------------------------------------------------------------
# Cross-validation
# ----------------------------------------------------------------------

def test_cv_on_noiseless_constant_picks_largest_lambda():
    y = np.full(40, 3.0)
    lambdas = np.logspace(-3, 1, 9)
    best, curve = cross_validate(y, 0, lambdas)
    assert best == lambdas[-1]
    assert curve.shape == (9,)
    assert np.max(curve) <= 1e-20


def test_cv_prefers_heavy_smoothing_on_noise():
    picks = []
    for seed in range(20):
        y = np.random.default_rng(seed).standard_normal(60)
        lambdas = lambda_max(y, 1) * np.logspace(-4, 0.5, 12)
        best, _ = cross_validate(y, 1, lambdas)
        picks.append(int(np.flatnonzero(lambdas == best)[0]))
    assert np.median(picks) >= 9


def test_cv_argument_checks(rng):
    y = rng.standard_normal(30)
    with pytest.raises(InputError):
        cross_validate(y, 1, [])
    with pytest.raises(InputError):
        cross_validate(y, 1, [1.0], folds=1)


# ----------------------------------------------------------------------
# Locally adaptive regression splines and refits
# ----------------------------------------------------------------------

def test_local_spline_zero_lambda_interpolates(noisy_signal):
    y = noisy_signal[:30]
    fit = fit_locally_adaptive_spline(y, 2, 0.0)
    np.testing.assert_allclose(fit.fitted, y, atol=1e-8)


@pytest.mark.parametrize("k", [0, 1])
def test_local_spline_equals_trend_filter_for_low_orders(k, noisy_signal):
    y = noisy_signal
    lam = 0.05 * lambda_max(y, k)
    local = fit_locally_adaptive_spline(y, k, lam)
    np.testing.assert_allclose(local.fitted, fit_trend_filter(y, k, lam).beta, atol=1e-6)
    assert local.tv == pytest.approx(float(np.sum(np.abs(local.theta[k + 1:]))))


def test_local_spline_lambda_max(noisy_signal):
    y = noisy_signal[:40]
    top = local_spline_lambda_max(y, 3)
    assert fit_locally_adaptive_spline(y, 3, 1.001 * top).df_estimate == 4
    assert fit_locally_adaptive_spline(y, 3, 0.5 * top).df_estimate > 4


def test_tune_local_spline(noisy_signal):
    fit = tune_local_spline_to_df(noisy_signal, 1, 8)
    assert abs(fit.df_estimate - 8) <= 1


@pytest.mark.parametrize("k", [1, 2])
def test_refit_undoes_shrinkage(k, noisy_signal):
    y = noisy_signal
    fit = fit_trend_filter(y, k, 0.05 * lambda_max(y, k))
    refit = refit_regression_spline(y, k, fit.knots)
    shrunk = np.sum(np.abs(np.diff(fit.beta, n=k + 1)))
    assert np.sum(np.abs(np.diff(refit, n=k + 1))) >= shrunk - 1e-8
    assert np.sum((y - refit) ** 2) <= np.sum((y - fit.beta) ** 2) + 1e-10


def test_refit_without_knots_is_polynomial(noisy_signal):
    refit = refit_regression_spline(noisy_signal, 1, [])
    assert np.max(np.abs(np.diff(refit, n=2))) <= 1e-10


def test_refit_rejects_bad_rows(noisy_signal):
    with pytest.raises(InputError):
        refit_regression_spline(noisy_signal, 1, [noisy_signal.size])
