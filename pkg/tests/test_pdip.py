import numpy as np
import pytest

from models.config import FitConfig, ScaleConvention
from models.errors import ConvergenceError, InputError
from models.problem import TFProblem, effective_lambda
from services.bases import make_H
from services.diff_ops import make_diff_op, polynomial_projection
from services.solvers.lasso_cd import solve_lasso_cd
from services.solvers.pdip import dual_from_residual, lambda_max, solve_tf_path, solve_tf_pdip
from services.solvers.taut_string import solve_tf_tautstring


def _rms(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _solve(y, k, lam, cfg=None):
    return solve_tf_pdip(TFProblem(y=y, k=k, lam=lam), cfg or FitConfig())


def test_zero_lambda_returns_data(rng):
    y = rng.standard_normal(20)
    beta, dual, diag = _solve(y, 2, 0.0)
    np.testing.assert_array_equal(beta, y)
    assert diag.converged and dual.shape == (17,)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("n", [20, 120, 500])
def test_large_lambda_gives_polynomial_fit(k, n, rng):
    y = rng.standard_normal(n)
    beta, _, diag = _solve(y, k, 1.001 * lambda_max(y, k))
    np.testing.assert_allclose(beta, polynomial_projection(y, k), atol=1e-8)
    assert diag.converged


def test_just_below_lambda_max_has_a_knot(rng):
    y = rng.standard_normal(40)
    beta, _, _ = _solve(y, 1, 0.9 * lambda_max(y, 1))
    assert np.max(np.abs(np.diff(beta, n=2))) > 1e-6


def test_lambda_max_units(rng):
    y = rng.standard_normal(30)
    k = 2
    scaled = lambda_max(y, k, ScaleConvention.GRID_SCALED)
    raw = lambda_max(y, k, ScaleConvention.RAW)
    assert raw == pytest.approx(effective_lambda(scaled, 30, k, ScaleConvention.GRID_SCALED))


def test_dual_from_residual_solves_transpose_system(rng):
    op = make_diff_op(25, 3)
    y = rng.standard_normal(25)
    r = y - polynomial_projection(y, 2)
    z = dual_from_residual(op, r)
    np.testing.assert_allclose(op.apply_transpose(z), r, atol=1e-10)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_certificates(k, noisy_signal):
    y = noisy_signal
    lam = 0.1 * lambda_max(y, k)
    beta, z, diag = _solve(y, k, lam)
    lam_eff = effective_lambda(lam, y.size, k, ScaleConvention.GRID_SCALED)
    op = make_diff_op(y.size, k + 1)
    assert diag.converged
    assert diag.relative_gap <= 1e-6
    assert np.max(np.abs(z)) <= lam_eff * (1 + 1e-9)
    np.testing.assert_allclose(op.apply_transpose(z), y - beta, atol=1e-8)


@pytest.mark.parametrize("k", [0, 1, 3])
@pytest.mark.parametrize("fraction", [1e-4, 0.05, 0.7])
def test_weak_duality_at_every_iterate(k, fraction, noisy_signal):
    y = noisy_signal
    _, _, diag = _solve(y, k, fraction * lambda_max(y, k), FitConfig(polish=False))
    assert len(diag.objective_history) == diag.iterations + 1
    for primal, dual in diag.objective_history:
        assert primal >= dual - 1e-12 * max(1.0, abs(primal))
    assert "objective_history" not in diag.to_dict()


def test_agrees_with_lasso_oracle_mid_range(rng):
    n, k = 16, 2
    y = rng.standard_normal(n)
    lam = 0.2 * lambda_max(y, k)
    beta, _, _ = _solve(y, k, lam)
    H = make_H(n, k).entries
    alpha = solve_lasso_cd(H, y, lam, k + 1)
    assert _rms(beta, H @ alpha) <= 1e-6


@pytest.mark.parametrize("seed", range(20))
def test_agrees_with_lasso_oracle_over_seeds(seed):
    rng = np.random.default_rng(seed)
    k = seed % 4
    n = 12 + seed % 9
    y = np.cumsum(rng.standard_normal(n)) / 3 + rng.standard_normal(n)
    H = make_H(n, k).entries
    top = lambda_max(y, k)
    for fraction in (0.02, 0.15, 0.6):
        beta, _, _ = _solve(y, k, fraction * top)
        alpha = solve_lasso_cd(H, y, fraction * top, k + 1)
        assert _rms(beta, H @ alpha) <= 1e-6


@pytest.mark.parametrize("n", [8, 100, 1000])
def test_constant_order_matches_taut_string(n, rng):
    y = np.cumsum(rng.standard_normal(n)) / np.sqrt(n) + rng.standard_normal(n)
    lam = 0.05 * lambda_max(y, 0)
    beta, _, _ = _solve(y, 0, lam)
    assert _rms(beta, solve_tf_tautstring(y, lam)) <= 1e-8


def test_path_matches_cold_solves(noisy_signal):
    y = noisy_signal
    top = lambda_max(y, 1)
    grid = [0.01 * top, 0.3 * top, 0.05 * top, 2 * top]
    path = solve_tf_path(y, 1, grid, FitConfig())
    for lam, (beta, _, _) in zip(grid, path):
        cold, _, _ = _solve(y, 1, lam)
        np.testing.assert_allclose(beta, cold, atol=1e-6)


def test_warm_start_shape_is_checked(noisy_signal):
    with pytest.raises(InputError):
        solve_tf_pdip(TFProblem(y=noisy_signal, k=1, lam=1.0), warm_start=np.zeros(3))


def test_iteration_cap_raises_with_history(noisy_signal):
    y = noisy_signal
    cfg = FitConfig(max_iter=1, polish=False)
    with pytest.raises(ConvergenceError) as info:
        _solve(y, 2, 0.05 * lambda_max(y, 2), cfg)
    assert info.value.diagnostics is not None
    assert not info.value.diagnostics.converged
    assert len(info.value.history) == 2


@pytest.mark.parametrize(
    "y, k, lam",
    [(np.ones(3), 2, 1.0), (np.ones(10), -1, 1.0), (np.ones(10), 1, -1.0), (np.array([1.0, np.nan, 2.0]), 0, 1.0)],
)
def test_problem_validation(y, k, lam):
    with pytest.raises(InputError):
        TFProblem(y=y, k=k, lam=lam)


def test_minimal_size_single_penalty_row():
    y = np.array([0.0, 1.0, 0.0, 2.0])
    beta, z, _ = _solve(y, 2, 0.0001)
    assert z.shape == (1,)
    assert beta.shape == (4,)
