"""
Basis models – knot superset and dense basis matrices.

Responsibility: plain containers for the truncated power (G) and falling
factorial (H) evaluation matrices and the knot set they are built on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class BasisKind(str, Enum):
    """Which family of basis functions a matrix evaluates."""
    TRUNCATED_POWER = "truncated_power"
    FALLING_FACTORIAL = "falling_factorial"


@dataclass(frozen=True, eq=False)
class KnotSet:
    """Knot superset T = {t_1, ..., t_{n-k-1}} for evenly spaced inputs."""

    knots: np.ndarray = field(repr=False)
    k: int
    n: int

    def __len__(self) -> int:
        return int(self.knots.size)


@dataclass(frozen=True, eq=False)
class BasisMatrix:
    """n x n evaluation matrix: entries[i, j] = basis_j(x_i)."""

    kind: BasisKind
    k: int
    n: int
    entries: np.ndarray = field(repr=False)

    @property
    def penalized_from(self) -> int:
        """0-based index of the first penalized column (k + 1)."""
        return self.k + 1
