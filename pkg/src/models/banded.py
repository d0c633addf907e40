"""
BandedMatrix – diagonal-major band storage.

Responsibility: hold the entries of a banded matrix and convert to and
from dense / scipy sparse form. Arithmetic lives in services.banded_linalg.

Storage follows LAPACK's general band layout: ``bands[upper_bw + i - j, j]``
holds entry (i, j), so each row of ``bands`` is one diagonal, stored as a
contiguous run. Slots falling outside the matrix are kept at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from .errors import InputError


@dataclass(frozen=True, eq=False)
class BandedMatrix:
    """Immutable banded matrix in diagonal-major storage."""

    n_rows: int
    n_cols: int
    lower_bw: int
    upper_bw: int
    bands: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.n_rows < 1 or self.n_cols < 1:
            raise InputError("banded matrix needs at least one row and one column")
        if self.lower_bw < 0 or self.upper_bw < 0:
            raise InputError("bandwidths must be nonnegative")
        if self.lower_bw >= self.n_rows or self.upper_bw >= self.n_cols:
            raise InputError(
                f"bandwidths ({self.lower_bw}, {self.upper_bw}) too large for "
                f"a {self.n_rows}x{self.n_cols} matrix"
            )
        expected = (self.lower_bw + self.upper_bw + 1, self.n_cols)
        if self.bands.shape != expected:
            raise InputError(f"band array has shape {self.bands.shape}, expected {expected}")
        bands = np.array(self.bands, dtype=np.float64, copy=True)
        bands[~self._valid_mask()] = 0.0
        bands.setflags(write=False)
        object.__setattr__(self, "bands", bands)

    # ------------------------------------------------------------------
    # Factories
    # ------------------------------------------------------------------

    @staticmethod
    def from_dense(dense: np.ndarray, lower_bw: int, upper_bw: int) -> "BandedMatrix":
        """Pack a dense matrix; entries outside the band must be zero."""
        a = np.asarray(dense, dtype=np.float64)
        if a.ndim != 2:
            raise InputError("dense matrix must be two-dimensional")
        m, n = a.shape
        rows, cols = np.nonzero(a)
        if np.any(rows - cols > lower_bw) or np.any(cols - rows > upper_bw):
            raise InputError("dense matrix has nonzeros outside the requested band")
        bands = np.zeros((lower_bw + upper_bw + 1, n))
        for d in range(-lower_bw, upper_bw + 1):
            diag = np.diagonal(a, offset=d)
            start = max(0, d)
            bands[upper_bw - d, start:start + diag.size] = diag
        return BandedMatrix(m, n, lower_bw, upper_bw, bands)

    @staticmethod
    def from_diagonals(
        diagonals: Sequence[np.ndarray],
        offsets: Sequence[int],
        shape: tuple[int, int],
    ) -> "BandedMatrix":
        """Build from explicit diagonals; offset d is the diagonal j - i = d."""
        m, n = shape
        lower_bw = max(0, -min(offsets))
        upper_bw = max(0, max(offsets))
        bands = np.zeros((lower_bw + upper_bw + 1, n))
        for diag, d in zip(diagonals, offsets):
            diag = np.asarray(diag, dtype=np.float64)
            start = max(0, d)
            bands[upper_bw - d, start:start + diag.size] = diag
        return BandedMatrix(m, n, lower_bw, upper_bw, bands)

    @staticmethod
    def from_sparse(matrix: sparse.sparray, lower_bw: int, upper_bw: int) -> "BandedMatrix":
        m, n = matrix.shape
        diagonals = [matrix.diagonal(d) for d in range(-lower_bw, upper_bw + 1)]
        return BandedMatrix.from_diagonals(diagonals, list(range(-lower_bw, upper_bw + 1)), (m, n))

    # ------------------------------------------------------------------
    # Conversions
    # ------------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    @property
    def offsets(self) -> np.ndarray:
        """Diagonal offsets (j - i) matching the rows of `bands`."""
        return np.arange(self.upper_bw, -self.lower_bw - 1, -1)

    def to_sparse(self) -> sparse.dia_array:
        # dia storage aligns data by column, the same alignment as LAPACK band storage.
        return sparse.dia_array((self.bands, self.offsets), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        return self.to_sparse().toarray()

    def diagonal(self, offset: int = 0) -> np.ndarray:
        start = max(0, offset)
        length = max(0, min(self.n_rows + offset, self.n_cols) - start)
        if offset > self.upper_bw or -offset > self.lower_bw:
            return np.zeros(length)
        return np.array(self.bands[self.upper_bw - offset, start:start + length])

    def transpose(self) -> "BandedMatrix":
        offsets = list(range(-self.upper_bw, self.lower_bw + 1))
        diagonals = [self.diagonal(-d) for d in offsets]
        return BandedMatrix.from_diagonals(diagonals, offsets, (self.n_cols, self.n_rows))

    @property
    def T(self) -> "BandedMatrix":
        return self.transpose()

    def is_symmetric(self) -> bool:
        if self.n_rows != self.n_cols or self.lower_bw != self.upper_bw:
            return False
        return all(
            np.array_equal(self.diagonal(d), self.diagonal(-d)) for d in range(1, self.upper_bw + 1)
        )

    def upper_bands(self) -> np.ndarray:
        """LAPACK symmetric upper storage (rows 0..upper_bw), for pbtrf."""
        return np.array(self.bands[: self.upper_bw + 1], order="F")

    # ------------------------------------------------------------------
    # Internals
    # ------------------------------------------------------------------

    def _valid_mask(self) -> np.ndarray:
        d = self.upper_bw - np.arange(self.lower_bw + self.upper_bw + 1)[:, None]
        j = np.arange(self.n_cols)[None, :]
        i = j - d
        return (i >= 0) & (i < self.n_rows)
