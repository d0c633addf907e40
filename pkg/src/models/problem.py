"""
TFProblem / SolverDiagnostics – inputs and certificates of a fixed-lambda solve.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import ScaleConvention
from .errors import InputError


@dataclass(frozen=True, eq=False)
class TFProblem:
    """Trend filtering of order k at a fixed lambda."""

    y: np.ndarray = field(repr=False)
    k: int
    lam: float
    scale: ScaleConvention = ScaleConvention.GRID_SCALED

    def __post_init__(self) -> None:
        y = np.asarray(self.y, dtype=np.float64)
        if y.ndim != 1:
            raise InputError("y must be a vector")
        if self.k < 0:
            raise InputError(f"order k must be nonnegative, got {self.k}")
        if y.size < self.k + 2:
            raise InputError(f"need at least k + 2 = {self.k + 2} observations, got {y.size}")
        if not np.all(np.isfinite(y)):
            raise InputError("y contains non-finite values")
        if self.lam < 0 or not math.isfinite(self.lam):
            raise InputError(f"lambda must be finite and nonnegative, got {self.lam}")
        y = y.copy()
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "scale", ScaleConvention(self.scale))

    @property
    def n(self) -> int:
        return int(self.y.size)

    @property
    def lambda_eff(self) -> float:
        """Penalty weight on ||D^(k+1) beta||_1."""
        return effective_lambda(self.lam, self.n, self.k, self.scale)


def lambda_scale_factor(n: int, k: int, scale: ScaleConvention) -> float:
    """n^k / k! for grid-scaled lambdas, 1 for raw ones."""
    if ScaleConvention(scale) is ScaleConvention.RAW:
        return 1.0
    return float(n) ** k / math.factorial(k)


def effective_lambda(lam: float, n: int, k: int, scale: ScaleConvention) -> float:
    return lam * lambda_scale_factor(n, k, scale)


@dataclass
class SolverDiagnostics:
    """Convergence record of one solve."""

    iterations: int = 0
    duality_gap: float = 0.0
    relative_gap: float = 0.0
    primal_obj: float = 0.0
    dual_obj: float = 0.0
    converged: bool = False
    wall_time: float = 0.0
    polished: bool = False
    # (primal, dual) objective at each interior point iterate
    objective_history: list[tuple[float, float]] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        summary = asdict(self)
        del summary["objective_history"]
        return summary
