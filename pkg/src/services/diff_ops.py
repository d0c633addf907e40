"""
Difference operators – D^(k+1), its Gram matrix, cumulative sums and the
polynomial null space.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from models.banded import BandedMatrix
from models.diff_op import DiffOp
from models.errors import InputError
from services.banded_linalg import band_outer_gram

MAX_ORDER = 11   # k up to 10


def make_diff_op(n: int, order: int) -> DiffOp:
    """D^(order) over n points, built as D^(1) * D^(order-1)."""
    if order < 1 or order > MAX_ORDER:
        raise InputError(f"difference order must be in [1, {MAX_ORDER}], got {order}")
    if n < order + 1:
        raise InputError(f"need n >= order + 1 = {order + 1} points, got {n}")
    coefficients = difference_pattern(order)
    rows = n - order
    diagonals = [np.full(rows, float(c)) for c in coefficients]
    matrix = BandedMatrix.from_diagonals(diagonals, list(range(order + 1)), (rows, n))
    return DiffOp(n=n, order=order, coefficients=coefficients, matrix=matrix)


@lru_cache(maxsize=None)
def _pattern(order: int) -> tuple[int, ...]:
    row = np.array([-1, 1], dtype=np.int64)
    for _ in range(order - 1):
        row = np.convolve(row, np.array([-1, 1], dtype=np.int64))
    return tuple(int(c) for c in row)


def difference_pattern(order: int) -> np.ndarray:
    """Exact integer row of D^(order): (-1)^(order-m) * C(order, m), m = 0..order."""
    return np.array(_pattern(order), dtype=np.int64)


def diff_gram(op: DiffOp) -> BandedMatrix:
    """D D^T, symmetric with half bandwidth equal to the order."""
    return band_outer_gram(op.matrix)


def cumsum_k(i: int, k: int) -> float:
    """sigma_i^(k): the k-th order cumulative sum of (1, ..., 1) in R^i, at position i."""
    if i < 1 or k < 0:
        raise InputError("cumsum_k needs i >= 1 and k >= 0")
    return float(cumsum_vector(i, k)[-1])


def cumsum_vector(length: int, k: int) -> np.ndarray:
    """(sigma_1^(k), ..., sigma_length^(k))."""
    sigma = np.ones(length)
    for _ in range(k):
        sigma = np.cumsum(sigma)
    return sigma


def poly_null_basis(n: int, k: int) -> np.ndarray:
    """Orthonormal basis of degree-<=k polynomials on x_i = i/n; spans null(D^(k+1))."""
    if n < k + 2:
        raise InputError(f"need n >= k + 2 = {k + 2} points, got {n}")
    x = np.arange(1, n + 1) / n
    vander = np.vander(x, k + 1, increasing=True)
    q, r = np.linalg.qr(vander)
    # fix signs so the constant column is positive
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def polynomial_projection(y: np.ndarray, k: int) -> np.ndarray:
    """Least-squares fit of a degree-k polynomial to y on the even grid."""
    y = np.asarray(y, dtype=np.float64)
    q = poly_null_basis(y.size, k)
    return q @ (q.T @ y)

