import math

import numpy as np
import pytest

from models.basis import BasisKind
from models.config import FitConfig
from models.errors import InputError
from services.bases import (
    DENSE_BASIS_MAX_N,
    basis_apply,
    basis_coefficients,
    eval_tf_function,
    eval_truncated_power,
    make_G,
    make_H,
    make_knots,
)
from services.estimators import fit_trend_filter
from services.solvers.pdip import lambda_max


def _direct_h(x: float, n: int, k: int, j: int) -> float:
    """h_j(x), 1-based j, straight from the product definition."""
    if j <= k + 1:
        return x ** (j - 1)
    jj = j - k - 1
    if x < (jj + k) / n:
        return 0.0
    return math.prod(x - (jj + ell) / n for ell in range(1, k + 1))


# ----------------------------------------------------------------------
# Knots and G
# ----------------------------------------------------------------------

@pytest.mark.parametrize("k, first", [(0, 2 / 10), (1, 2 / 10), (2, 3 / 10), (3, 3 / 10)])
def test_knot_superset_placement(k, first):
    knots = make_knots(10, k)
    assert len(knots) == 10 - k - 1
    assert knots.knots[0] == pytest.approx(first)
    assert np.all(np.diff(knots.knots) > 0)
    assert knots.knots[0] > 1 / 10
    assert knots.knots[-1] <= 1.0


def test_G_constant_case_is_lower_triangular_ones():
    np.testing.assert_array_equal(make_G(7, 0).entries, np.tril(np.ones((7, 7))))


def test_G_polynomial_block(grid):
    basis = make_G(22, 3)
    assert basis.entries.shape == (22, 22)
    assert basis.kind is BasisKind.TRUNCATED_POWER
    assert basis.penalized_from == 4
    x = grid(22)
    np.testing.assert_allclose(basis.entries[:, :4], np.vander(x, 4, increasing=True), atol=1e-15)
    np.testing.assert_array_equal(basis.entries @ np.eye(22)[0], np.ones(22))


def test_dense_basis_size_cap():
    with pytest.raises(InputError):
        make_G(DENSE_BASIS_MAX_N + 1, 1)
    with pytest.raises(InputError):
        make_H(DENSE_BASIS_MAX_N + 1, 1)


def test_bases_need_k_plus_two_points():
    with pytest.raises(InputError):
        make_H(3, 2)


# ----------------------------------------------------------------------
# H
# ----------------------------------------------------------------------

@pytest.mark.parametrize("k", [0, 1])
@pytest.mark.parametrize("n", [10, 50, 200])
def test_G_equals_H_for_low_orders(k, n):
    diff = np.max(np.abs(make_G(n, k).entries - make_H(n, k).entries))
    assert diff <= 1e-12


@pytest.mark.parametrize("k", [2, 3])
@pytest.mark.parametrize("n", [10, 50, 200])
def test_G_differs_from_H_for_higher_orders(k, n):
    assert np.max(np.abs(make_G(n, k).entries - make_H(n, k).entries)) > 1e-6


def test_H_entry_example():
    assert make_H(5, 1).entries[3, 2] == pytest.approx(2 / 5, abs=1e-15)


@pytest.mark.parametrize("k", range(6))
@pytest.mark.parametrize("n", [10, 57, 200])
def test_H_constructions_agree(k, n):
    cumsum = make_H(n, k, "cumsum").entries
    np.testing.assert_allclose(make_H(n, k, "product").entries, cumsum, rtol=0, atol=1e-12)
    np.testing.assert_allclose(make_H(n, k, "evaluate").entries, cumsum, rtol=0, atol=1e-12)


def test_H_unknown_method():
    with pytest.raises(InputError):
        make_H(10, 1, "dense")


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_coefficients_invert_H(k, rng):
    n = 50
    b = rng.standard_normal(n)
    alpha = basis_coefficients(b, k)
    H = make_H(n, k).entries
    assert np.max(np.abs(H @ alpha - b)) <= 1e-8 * np.max(np.abs(b))
    np.testing.assert_allclose(basis_apply(alpha, k), H @ alpha, atol=1e-9)


# ----------------------------------------------------------------------
# Continuous-time evaluation
# ----------------------------------------------------------------------

@pytest.mark.parametrize("k", [1, 3])
def test_fit_interpolates_fitted_values(k, noisy_signal, grid):
    y = noisy_signal[:30]
    fit = fit_trend_filter(y, k, 0.05 * lambda_max(y, k), FitConfig())
    values = eval_tf_function(fit.coeffs_alpha, k, grid(30))
    np.testing.assert_allclose(values, fit.beta, atol=1e-9)


def test_first_basis_function_is_constant():
    coeffs = np.zeros(12)
    coeffs[0] = 1.0
    np.testing.assert_array_equal(eval_tf_function(coeffs, 3, np.linspace(0, 1, 9)), np.ones(9))


def test_evaluation_between_inputs_matches_product_formula(rng):
    n, k = 15, 3
    alpha = rng.standard_normal(n)
    x = (np.arange(1, n) + 0.37) / n
    expected = [sum(alpha[j - 1] * _direct_h(xi, n, k, j) for j in range(1, n + 1)) for xi in x]
    np.testing.assert_allclose(eval_tf_function(alpha, k, x), expected, atol=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_fit_is_continuous_at_inputs(k, rng):
    n = 40
    alpha = 1e-2 * rng.standard_normal(n)
    inputs = np.arange(2, n) / n
    h = 1e-10
    jumps = eval_tf_function(alpha, k, inputs + h) - eval_tf_function(alpha, k, inputs - h)
    assert np.max(np.abs(jumps)) <= 1e-8


def test_derivative_can_jump_for_quadratic_order():
    n, k = 10, 2
    alpha = np.zeros(n)
    alpha[k + 1] = 1.0
    at = 3 / n
    h = 1e-6
    right = (eval_tf_function(alpha, k, at + h) - eval_tf_function(alpha, k, at)) / h
    left = (eval_tf_function(alpha, k, at) - eval_tf_function(alpha, k, at - h)) / h
    assert right - left == pytest.approx(1 / n, abs=1e-5)


def test_scalar_in_scalar_out():
    value = eval_tf_function(np.ones(6), 1, 0.5)
    assert isinstance(value, float)


@pytest.mark.parametrize("x", [-0.1, 1.2, np.nan])
def test_evaluation_outside_unit_interval(x):
    with pytest.raises(InputError):
        eval_tf_function(np.ones(6), 1, x)


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_truncated_power_evaluation_matches_G(k, rng, grid):
    n = 25
    theta = rng.standard_normal(n)
    G = make_G(n, k).entries
    np.testing.assert_allclose(eval_truncated_power(theta, k, grid(n)), G @ theta, atol=1e-10)
