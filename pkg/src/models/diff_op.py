"""
DiffOp – the discrete difference operator D^(order) over n evenly spaced points.

Responsibility: carry the exact integer row pattern and its banded float
form. Construction (the recursion) lives in services.diff_ops.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .banded import BandedMatrix
from .errors import InputError


@dataclass(frozen=True, eq=False)
class DiffOp:
    """(n - order) x n banded difference operator; every row is `coefficients` shifted."""

    n: int
    order: int
    coefficients: np.ndarray = field(repr=False)   # int64, length order + 1
    matrix: BandedMatrix = field(repr=False)

    @property
    def k(self) -> int:
        """Trend filtering order this operator penalizes (order = k + 1)."""
        return self.order - 1

    @property
    def n_rows(self) -> int:
        return self.n - self.order

    @property
    def bandwidth(self) -> int:
        """Nonzeros per row (k + 2)."""
        return self.order + 1

    def apply(self, v: np.ndarray) -> np.ndarray:
        """D v."""
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.n,):
            raise InputError(f"vector of length {v.shape} does not match operator width {self.n}")
        return np.diff(v, n=self.order)

    def apply_transpose(self, w: np.ndarray) -> np.ndarray:
        """D^T w (full convolution with the row pattern)."""
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.n_rows,):
            raise InputError(f"vector of length {w.shape} does not match operator height {self.n_rows}")
        # (D^T w)_j = sum_i c_{j-i} w_i
        return np.convolve(w, self.coefficients.astype(np.float64))

    def to_dense(self) -> np.ndarray:
        return self.matrix.to_dense()
