"""
Fit results – value objects returned by the estimators.

Responsibility: carry fitted values, tuning and diagnostics, and serialise
the scalar summary that the CLI writes as a JSON sidecar.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from .config import SCHEMA_VERSION, ScaleConvention
from .problem import SolverDiagnostics


@dataclass(eq=False)
class TrendFilterFit:
    """Trend filtering estimate with its detected knots and plug-in df."""

    beta: np.ndarray = field(repr=False)
    k: int
    lam: float
    knots: np.ndarray = field(repr=False)   # 0-based rows of D^(k+1) with nonzero entries
    diagnostics: SolverDiagnostics = field(default_factory=SolverDiagnostics)
    scale: ScaleConvention = ScaleConvention.GRID_SCALED
    dual: Optional[np.ndarray] = field(default=None, repr=False)
    warning: Optional[str] = None

    @property
    def n(self) -> int:
        return int(self.beta.size)

    @property
    def df_estimate(self) -> int:
        """Number of knots plus k + 1."""
        return int(self.knots.size) + self.k + 1

    @cached_property
    def coeffs_alpha(self) -> np.ndarray:
        """Falling factorial basis coefficients, alpha = H^{-1} beta."""
        from services.bases import basis_coefficients

        return basis_coefficients(self.beta, self.k)

    def summary(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "lambda": self.lam,
            "scale": self.scale.value,
            "k": self.k,
            "df": self.df_estimate,
            "knots": [int(i) + 1 for i in self.knots],
            "duality_gap": self.diagnostics.duality_gap,
            "relative_gap": self.diagnostics.relative_gap,
            "iterations": self.diagnostics.iterations,
            "wall_time": self.diagnostics.wall_time,
            "converged": self.diagnostics.converged,
            "warning": self.warning,
        }


@dataclass(eq=False)
class SmoothingSplineFit:
    """Cubic smoothing spline in Reinsch form, u = (I + lambda K)^{-1} y."""

    fitted: np.ndarray = field(repr=False)
    lam: float
    df: float

    @property
    def n(self) -> int:
        return int(self.fitted.size)

    def summary(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "lambda": self.lam, "df": self.df}


@dataclass(eq=False)
class LocalSplineFit:
    """Locally adaptive regression spline via its truncated power lasso form."""

    fitted: np.ndarray = field(repr=False)
    theta: np.ndarray = field(repr=False)
    k: int
    lam: float
    tv: float

    @property
    def df_estimate(self) -> int:
        """Nonzero penalized coefficients plus k + 1."""
        return int(np.count_nonzero(self.theta[self.k + 1:])) + self.k + 1
