"""Trend filtering – numerical and storage services."""
from .storage_service import StorageService
from .estimators import (
    cross_validate,
    fit_locally_adaptive_spline,
    fit_trend_filter,
    fit_trend_filter_path,
    refit_regression_spline,
    tune_local_spline_to_df,
    tune_to_df,
)
from .smoothing_spline import (
    df_smoothing_spline,
    fit_smoothing_spline,
    fit_split_smoothing_spline,
    tune_smoothing_spline_to_df,
)
from .simbench import BenchmarkService, generate, loss_mse, rate_check, rate_study, run_benchmark

__all__ = [
    "StorageService",
    "BenchmarkService",
    "cross_validate",
    "df_smoothing_spline",
    "fit_locally_adaptive_spline",
    "fit_smoothing_spline",
    "fit_split_smoothing_spline",
    "fit_trend_filter",
    "fit_trend_filter_path",
    "generate",
    "loss_mse",
    "rate_check",
    "rate_study",
    "refit_regression_spline",
    "run_benchmark",
    "tune_local_spline_to_df",
    "tune_smoothing_spline_to_df",
    "tune_to_df",
]
