import numpy as np
import pytest

from models.config import FitConfig
from models.errors import InputError
from models.problem import TFProblem
from services.solvers.pdip import solve_tf_pdip
from services.solvers.taut_string import _tv_denoise, solve_tf_tautstring


def test_zero_lambda_is_identity(rng):
    y = rng.standard_normal(15)
    np.testing.assert_array_equal(solve_tf_tautstring(y, 0.0), y)


def test_huge_lambda_gives_mean(rng):
    y = rng.standard_normal(30)
    np.testing.assert_allclose(solve_tf_tautstring(y, 1e6), np.full(30, y.mean()), atol=1e-10)


@pytest.mark.parametrize("lam", [0.05, 0.5, 5.0])
def test_monotone_input_stays_monotone(lam, rng):
    y = np.sort(rng.standard_normal(40))
    assert np.all(np.diff(solve_tf_tautstring(y, lam)) >= -1e-12)


def test_preserves_mean(rng):
    y = rng.standard_normal(50)
    assert solve_tf_tautstring(y, 0.7).mean() == pytest.approx(y.mean(), abs=1e-12)


def test_matches_interior_point(rng):
    y = rng.standard_normal(8)
    lam = 0.3
    beta, _, _ = solve_tf_pdip(TFProblem(y=y, k=0, lam=lam), FitConfig())
    np.testing.assert_allclose(solve_tf_tautstring(y, lam), beta, atol=1e-8)


@pytest.mark.parametrize("n", [2, 5, 12])
def test_matches_convex_program_oracle(n, rng):
    cp = pytest.importorskip("cvxpy")
    y = rng.standard_normal(n)
    lam = 0.4
    beta = cp.Variable(n)
    cp.Problem(cp.Minimize(0.5 * cp.sum_squares(y - beta) + lam * cp.norm1(cp.diff(beta)))).solve()
    np.testing.assert_allclose(solve_tf_tautstring(y, lam), beta.value, atol=1e-5)


def test_short_input_and_negative_lambda():
    np.testing.assert_array_equal(solve_tf_tautstring(np.array([3.0]), 1.0), [3.0])
    with pytest.raises(InputError):
        solve_tf_tautstring(np.ones(4), -0.1)


@pytest.mark.parametrize(
    "y, lam, expected",
    [
        ([0.0, 0.0, 5.0, 5.0], 0.5, [0.25, 0.25, 4.75, 4.75]),
        ([1.0, 2.0, 3.0], 10.0, [2.0, 2.0, 2.0]),
        ([3.0, 1.0], 0.25, [2.75, 1.25]),
        ([0.0, 4.0, 0.0], 1.0, [1.0, 2.0, 1.0]),
    ],
)
def test_small_cases_by_hand(y, lam, expected):
    np.testing.assert_allclose(solve_tf_tautstring(np.array(y), lam), expected, atol=1e-12)


@pytest.mark.parametrize("seed", range(6))
def test_compiled_kernel_matches_python(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 300))
    y = np.cumsum(rng.standard_normal(n)) + rng.standard_normal(n)
    lam = float(10 ** rng.uniform(-2, 1))
    compiled, interpreted = np.empty(n), np.empty(n)
    _tv_denoise(y, lam, compiled)
    _tv_denoise.py_func(y, lam, interpreted)
    np.testing.assert_allclose(compiled, interpreted, atol=1e-12)


def test_optimality_conditions(rng):
    # y - beta = D^T u with |u| <= lam and u = lam * sign at every jump
    y = np.cumsum(rng.standard_normal(60))
    lam = 0.8
    beta = solve_tf_tautstring(y, lam)
    u = -np.cumsum(y - beta)[:-1]
    assert abs(np.sum(y - beta)) <= 1e-9
    assert np.all(np.abs(u) <= lam + 1e-9)
    jumps = np.flatnonzero(np.abs(np.diff(beta)) > 1e-9)
    np.testing.assert_allclose(u[jumps], lam * np.sign(np.diff(beta)[jumps]), atol=1e-9)
