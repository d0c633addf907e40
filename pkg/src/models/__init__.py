"""Trend filtering – domain models."""
from .banded import BandedMatrix
from .basis import BasisKind, BasisMatrix, KnotSet
from .config import SCHEMA_VERSION, Command, FitConfig, RunConfig, ScaleConvention
from .dataset import BenchResult, Dataset, Method, MethodSpec, RateResult, Scenario, bench_summary
from .diff_op import DiffOp
from .errors import (
    ConvergenceError,
    DataFormatError,
    InputError,
    NotPositiveDefiniteError,
    TrendFilterError,
)
from .fit import LocalSplineFit, SmoothingSplineFit, TrendFilterFit
from .problem import SolverDiagnostics, TFProblem

__all__ = [
    "BandedMatrix",
    "BasisKind",
    "BasisMatrix",
    "BenchResult",
    "Command",
    "ConvergenceError",
    "DataFormatError",
    "Dataset",
    "DiffOp",
    "FitConfig",
    "InputError",
    "KnotSet",
    "LocalSplineFit",
    "Method",
    "MethodSpec",
    "NotPositiveDefiniteError",
    "RateResult",
    "RunConfig",
    "SCHEMA_VERSION",
    "ScaleConvention",
    "Scenario",
    "SmoothingSplineFit",
    "SolverDiagnostics",
    "TFProblem",
    "TrendFilterError",
    "TrendFilterFit",
    "bench_summary",
]
