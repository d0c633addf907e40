"""
Bases – truncated power (G) and falling factorial (H) representations.

Responsibility: build the dense lasso design matrices used as reference
paths, move between fitted values and falling factorial coefficients
without forming H, and evaluate the continuous-time fit.

All constructions use the evenly spaced grid x_i = i / n (1-based i).
"""

from __future__ import annotations

import math
from typing import Literal

import numpy as np

from models.basis import BasisKind, BasisMatrix, KnotSet
from models.errors import InputError
from services.diff_ops import cumsum_vector

DENSE_BASIS_MAX_N = 5000

HMethod = Literal["cumsum", "product", "evaluate"]


def _check_sizes(n: int, k: int) -> None:
    if k < 0:
        raise InputError(f"order k must be nonnegative, got {k}")
    if n < k + 2:
        raise InputError(f"need n >= k + 2 = {k + 2} points, got {n}")


def _check_dense(n: int) -> None:
    if n > DENSE_BASIS_MAX_N:
        raise InputError(
            f"dense basis matrices are limited to n <= {DENSE_BASIS_MAX_N} (got {n}); "
            "use the difference-operator solvers instead"
        )


def _knot_shift(k: int) -> int:
    """Integer c with t_j = (c + j) / n."""
    return (k + 2) // 2 if k % 2 == 0 else (k + 1) // 2


def make_knots(n: int, k: int) -> KnotSet:
    """Knot superset: the inputs with boundary points removed."""
    _check_sizes(n, k)
    j = np.arange(1, n - k)
    return KnotSet(knots=(_knot_shift(k) + j) / n, k=k, n=n)


def _polynomial_block(n: int, k: int) -> np.ndarray:
    x = np.arange(1, n + 1) / n
    return np.vander(x, k + 1, increasing=True)


def make_G(n: int, k: int) -> BasisMatrix:
    """Truncated power basis evaluated on the grid (0^0 = 1)."""
    _check_sizes(n, k)
    _check_dense(n)
    entries = np.zeros((n, n))
    entries[:, : k + 1] = _polynomial_block(n, k)
    i = np.arange(1, n + 1)[:, None]
    j = np.arange(1, n - k)[None, :]
    # x_i - t_j = (i - c - j) / n with integer numerator
    d = (i - _knot_shift(k) - j).astype(np.float64)
    active = d >= 0
    entries[:, k + 1:] = np.where(active, np.power(np.where(active, d, 0.0), k) / float(n) ** k, 0.0)
    return BasisMatrix(kind=BasisKind.TRUNCATED_POWER, k=k, n=n, entries=entries)


def make_H(n: int, k: int, method: HMethod = "cumsum") -> BasisMatrix:
    """Falling factorial basis matrix, by cumulative sums, the product formula,
    or direct evaluation of the basis functions."""
    _check_sizes(n, k)
    _check_dense(n)
    if method == "evaluate":
        x = np.arange(1, n + 1) / n
        entries = falling_factorial_design(x, n, k)
        return BasisMatrix(kind=BasisKind.FALLING_FACTORIAL, k=k, n=n, entries=entries)

    entries = np.zeros((n, n))
    entries[:, : k + 1] = _polynomial_block(n, k)
    i = np.arange(1, n + 1)[:, None]
    cols = np.arange(k + 2, n + 1)[None, :]
    lag = i - cols   # i - j, nonzero region is lag >= 0
    if method == "cumsum":
        sigma = cumsum_vector(n, k) * (math.factorial(k) / float(n) ** k)
        block = np.where(lag >= 0, sigma[np.clip(lag, 0, n - 1)], 0.0)
    elif method == "product":
        block = np.ones((n, n - k - 1))
        for ell in range(1, k + 1):
            block = block * (i - (cols - k - 1 + ell)) / float(n)
        block = np.where(lag >= 0, block, 0.0)
    else:
        raise InputError(f"unknown construction method {method!r}")
    entries[:, k + 1:] = block
    return BasisMatrix(kind=BasisKind.FALLING_FACTORIAL, k=k, n=n, entries=entries)


def falling_factorial_design(x: np.ndarray, n: int, k: int) -> np.ndarray:
    """Evaluate h_1..h_n at the points x (rows) for the grid of size n.

    h_{k+1+j}(x) = prod_{l=1..k} (x - x_{j+l}) * 1{x > x_{j+k}}. The strict
    indicator makes h_{1+j} for k = 0 match the H matrix at the inputs;
    for k >= 1 the product already vanishes at x_{j+k}.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((x.size, n))
    out[:, : k + 1] = np.vander(x, k + 1, increasing=True)
    j = np.arange(1, n - k)[None, :]
    xc = x[:, None]
    block = np.ones((x.size, n - k - 1))
    for ell in range(1, k + 1):
        block = block * (xc - (j + ell) / n)
    out[:, k + 1:] = np.where(xc > (j + k) / n, block, 0.0)
    return out


def basis_coefficients(beta: np.ndarray, k: int) -> np.ndarray:
    """alpha = H^{-1} beta by repeated differencing; O(n k)."""
    beta = np.asarray(beta, dtype=np.float64)
    n = beta.size
    _check_sizes(n, k)
    alpha = np.empty(n)
    # D^(k+1) H = (k!/n^k) [0 | I]
    alpha[k + 1:] = np.diff(beta, n=k + 1) * (float(n) ** k / math.factorial(k))
    # the first k+1 rows of the penalized block are zero
    vander = _polynomial_block(n, k)[: k + 1]
    alpha[: k + 1] = np.linalg.solve(vander, beta[: k + 1])
    return alpha


def basis_apply(alpha: np.ndarray, k: int) -> np.ndarray:
    """H alpha without forming H: k+1 cumulative sums of the penalized block."""
    alpha = np.asarray(alpha, dtype=np.float64)
    n = alpha.size
    _check_sizes(n, k)
    u = np.zeros(n)
    u[k + 1:] = alpha[k + 1:]
    for _ in range(k + 1):
        u = np.cumsum(u)
    return _polynomial_block(n, k) @ alpha[: k + 1] + u * (math.factorial(k) / float(n) ** k)


def _as_points(x: np.ndarray | float) -> tuple[np.ndarray, bool]:
    scalar = np.ndim(x) == 0
    pts = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if np.any(pts < 0.0) or np.any(pts > 1.0) or not np.all(np.isfinite(pts)):
        raise InputError("evaluation points must lie in [0, 1]")
    return pts, scalar


def eval_tf_function(coeffs: np.ndarray, k: int, x: np.ndarray | float) -> np.ndarray | float:
    """Continuous-time trend filtering fit sum_j alpha_j h_j(x)."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    _check_sizes(coeffs.size, k)
    pts, scalar = _as_points(x)
    values = falling_factorial_design(pts, coeffs.size, k) @ coeffs
    return float(values[0]) if scalar else values


def eval_truncated_power(theta: np.ndarray, k: int, x: np.ndarray | float) -> np.ndarray | float:
    """Locally adaptive spline sum_j theta_j g_j(x) from its G-basis coefficients."""
    theta = np.asarray(theta, dtype=np.float64)
    n = theta.size
    _check_sizes(n, k)
    pts, scalar = _as_points(x)
    knots = make_knots(n, k).knots
    diff = pts[:, None] - knots[None, :]
    active = diff >= -1e-14
    hinge = np.where(active, np.power(np.where(active, np.maximum(diff, 0.0), 0.0), k), 0.0)
    values = np.vander(pts, k + 1, increasing=True) @ theta[: k + 1] + hinge @ theta[k + 1:]
    return float(values[0]) if scalar else values
