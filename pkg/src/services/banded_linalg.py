"""
Banded linear algebra – products and SPD factorizations in O(n * bandwidth).

Responsibility: the numerical kernel under every solver. Products go
through scipy's dia storage (same alignment as the band layout), the
Cholesky factorization and triangular solves through LAPACK pbtrf/pbtrs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.linalg import get_lapack_funcs

from models.banded import BandedMatrix
from models.errors import InputError, NotPositiveDefiniteError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BandedCholesky:
    """Upper Cholesky factor U (A = U^T U) in LAPACK upper band storage."""

    n: int
    bandwidth: int   # super-diagonals of A
    factor: np.ndarray = field(repr=False)

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve A x = b; b may be a vector or an (n, m) block of right-hand sides."""
        rhs = np.asarray(b, dtype=np.float64)
        if rhs.shape[0] != self.n:
            raise InputError(f"right-hand side has {rhs.shape[0]} rows, expected {self.n}")
        (pbtrs,) = get_lapack_funcs(("pbtrs",), (self.factor, rhs))
        x, info = pbtrs(self.factor, rhs, lower=0)
        if info != 0:
            raise InputError(f"pbtrs rejected argument {-info}")
        return x


def band_matvec(a: BandedMatrix, v: np.ndarray) -> np.ndarray:
    """A v."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (a.n_cols,):
        raise InputError(f"vector of shape {v.shape} does not match {a.n_rows}x{a.n_cols} matrix")
    return a.to_sparse() @ v


def band_add_diagonal(a: BandedMatrix, values: np.ndarray | float) -> BandedMatrix:
    """A + diag(values) for square A."""
    if a.n_rows != a.n_cols:
        raise InputError("diagonal shift needs a square matrix")
    bands = np.array(a.bands)
    bands[a.upper_bw] += np.broadcast_to(np.asarray(values, dtype=np.float64), (a.n_cols,))
    return BandedMatrix(a.n_rows, a.n_cols, a.lower_bw, a.upper_bw, bands)


def band_gram(a: BandedMatrix) -> BandedMatrix:
    """A^T A; half bandwidth lower_bw + upper_bw."""
    s = a.to_sparse().tocsr()
    gram = (s.T @ s).todia()
    w = min(a.lower_bw + a.upper_bw, a.n_cols - 1)
    return BandedMatrix.from_sparse(gram, w, w)


def band_outer_gram(a: BandedMatrix) -> BandedMatrix:
    """A A^T; half bandwidth lower_bw + upper_bw."""
    s = a.to_sparse().tocsr()
    gram = (s @ s.T).todia()
    w = min(a.lower_bw + a.upper_bw, a.n_rows - 1)
    return BandedMatrix.from_sparse(gram, w, w)


def band_sum(*terms: BandedMatrix) -> BandedMatrix:
    """Sum of equally shaped banded matrices."""
    shape = terms[0].shape
    if any(t.shape != shape for t in terms):
        raise InputError("banded matrices in a sum must share a shape")
    lower = max(t.lower_bw for t in terms)
    upper = max(t.upper_bw for t in terms)
    total = sum((t.to_sparse() for t in terms[1:]), terms[0].to_sparse())
    return BandedMatrix.from_sparse(sparse.dia_array(total), lower, upper)


def principal_submatrix(a: BandedMatrix, index: np.ndarray) -> BandedMatrix:
    """A[index][:, index] for sorted index; stays banded with at most A's bandwidth."""
    idx = np.asarray(index, dtype=np.intp)
    sub = a.to_sparse().tocsr()[idx][:, idx]
    w = min(a.upper_bw, max(idx.size - 1, 0))
    return BandedMatrix.from_sparse(sparse.dia_array(sub), w, w)


def band_cholesky_factor(a: BandedMatrix) -> BandedCholesky:
    """Factor a symmetric positive definite banded matrix (no pivoting)."""
    if a.n_rows != a.n_cols:
        raise InputError("Cholesky factorization needs a square matrix")
    if a.lower_bw != a.upper_bw:
        raise InputError("Cholesky factorization needs symmetric band widths")
    ab = a.upper_bands()
    (pbtrf,) = get_lapack_funcs(("pbtrf",), (ab,))
    factor, info = pbtrf(ab, lower=0)
    if info > 0:
        # LAPACK reports the order of the failing leading minor (1-based)
        raise NotPositiveDefiniteError(pivot=int(info) - 1)
    if info < 0:
        raise InputError(f"pbtrf rejected argument {-info}")
    return BandedCholesky(n=a.n_rows, bandwidth=a.upper_bw, factor=factor)


def band_cholesky_solve(a: BandedMatrix, b: np.ndarray) -> np.ndarray:
    """Solve A x = b for symmetric positive definite banded A."""
    return band_cholesky_factor(a).solve(b)
