"""
Estimators – user-facing trend filtering and locally adaptive spline fits.

Responsibility: wrap the fixed-lambda solvers into fits with detected
knots and a plug-in degrees of freedom, tune lambda to a target df,
choose lambda by structured cross-validation, and provide the locally
adaptive regression spline and fixed-knot refit used for comparison.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np

from models.config import FitConfig
from models.errors import InputError
from models.fit import LocalSplineFit, TrendFilterFit
from models.problem import SolverDiagnostics, TFProblem, effective_lambda
from services.bases import basis_apply, make_G
from services.diff_ops import polynomial_projection
from services.solvers.lasso_cd import solve_lasso_cd
from services.solvers.pdip import lambda_max, solve_tf_path, solve_tf_pdip

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------
# Trend filtering
# ----------------------------------------------------------------------

_ROUNDOFF = 1e-10


def active_rows(dual: np.ndarray, lam_eff: float) -> np.ndarray:
    """Mask of dual coordinates sitting on the box boundary |z_i| = lambda_eff."""
    return np.abs(dual) >= lam_eff * (1.0 - 1e-12)


def detect_knots(
    beta: np.ndarray,
    y: np.ndarray,
    k: int,
    knot_tol: float,
    active: Optional[np.ndarray] = None,
) -> np.ndarray:
    """0-based knot rows i of D^(k+1) beta.

    With the active set of a polished solve the knots are its rows where
    (D^(k+1) beta)_i is above roundoff. Otherwise a row is a knot when
    |(D^(k+1) beta)_i| > knot_tol * ||D^(k+1) beta||_inf. Roundoff is
    measured against ||D^(k+1) y||_inf.
    """
    d_beta = np.abs(np.diff(beta, n=k + 1))
    floor = _ROUNDOFF * float(np.max(np.abs(np.diff(y, n=k + 1)), initial=0.0))
    if active is not None:
        return np.flatnonzero(active & (d_beta > floor))
    threshold = max(knot_tol * float(np.max(d_beta, initial=0.0)), floor)
    return np.flatnonzero(d_beta > threshold)


def _knots_of(
    beta: np.ndarray,
    y: np.ndarray,
    k: int,
    dual: np.ndarray,
    diag: SolverDiagnostics,
    lam_eff: float,
    cfg: FitConfig,
) -> np.ndarray:
    active = active_rows(dual, lam_eff) if diag.polished else None
    return detect_knots(beta, y, k, cfg.knot_tol, active)


def fit_trend_filter(
    y: np.ndarray,
    k: int,
    lam: float,
    cfg: Optional[FitConfig] = None,
    warm_start: Optional[np.ndarray] = None,
) -> TrendFilterFit:
    """Trend filtering of order k at a fixed lambda (in cfg.scale units)."""
    cfg = cfg or FitConfig()
    problem = TFProblem(y=y, k=k, lam=lam, scale=cfg.scale)
    beta, dual, diag = solve_tf_pdip(problem, cfg, warm_start=warm_start)
    knots = _knots_of(beta, problem.y, k, dual, diag, problem.lambda_eff, cfg)
    return TrendFilterFit(
        beta=beta, k=k, lam=lam, knots=knots, diagnostics=diag, scale=cfg.scale, dual=dual
    )


def fit_trend_filter_path(
    y: np.ndarray, k: int, lambdas: Sequence[float], cfg: Optional[FitConfig] = None
) -> list[TrendFilterFit]:
    """Fits over a lambda grid with warm-started duals, in grid order."""
    cfg = cfg or FitConfig()
    y = np.asarray(y, dtype=np.float64)
    fits = []
    for lam, (beta, dual, diag) in zip(lambdas, solve_tf_path(y, k, lambdas, cfg)):
        fits.append(
            TrendFilterFit(
                beta=beta,
                k=k,
                lam=float(lam),
                knots=_knots_of(beta, y, k, dual, diag, effective_lambda(lam, y.size, k, cfg.scale), cfg),
                diagnostics=diag,
                scale=cfg.scale,
                dual=dual,
            )
        )
    return fits


# ----------------------------------------------------------------------
# df-targeted tuning
# ----------------------------------------------------------------------

def _bisect_log_lambda(
    fit_at: Callable[[float], tuple[int, object]],
    lam_lo: float,
    lam_hi: float,
    target_df: int,
    max_iter: int,
) -> tuple[float, int, object]:
    """Bisection on log lambda for a df that decreases in lambda.

    Returns (lambda, df, fit) of the closest df seen; ties go to the larger lambda.
    """
    best: Optional[tuple[float, int, object]] = None

    def consider(lam: float) -> int:
        nonlocal best
        df, fit = fit_at(lam)
        if best is None:
            best = (lam, df, fit)
        else:
            gap, best_gap = abs(df - target_df), abs(best[1] - target_df)
            if gap < best_gap or (gap == best_gap and lam > best[0]):
                best = (lam, df, fit)
        return df

    lo, hi = math.log(lam_lo), math.log(lam_hi)
    if consider(lam_hi) == target_df:
        return best
    if consider(lam_lo) == target_df:
        return best
    for _ in range(max_iter):
        if hi - lo < 1e-12:
            break
        mid = 0.5 * (lo + hi)
        df = consider(math.exp(mid))
        if df == target_df:
            break
        if df > target_df:
            lo = mid
        else:
            hi = mid
    return best


def _check_target(target_df: int, k: int, n: int) -> None:
    if not k + 1 <= target_df <= n:
        raise InputError(f"df target must lie in [{k + 1}, {n}], got {target_df}")


def tune_to_df(
    y: np.ndarray, k: int, target_df: int, cfg: Optional[FitConfig] = None
) -> TrendFilterFit:
    """Trend filtering fit whose plug-in df is closest to `target_df`."""
    cfg = cfg or FitConfig()
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    _check_target(target_df, k, n)
    lam_hi = lambda_max(y, k, cfg.scale)
    if target_df >= n or lam_hi == 0.0:
        fit = fit_trend_filter(y, k, 0.0, cfg)
    elif target_df <= k + 1:
        fit = fit_trend_filter(y, k, lam_hi, cfg)
    else:
        dual: list[Optional[np.ndarray]] = [None]

        def fit_at(lam: float) -> tuple[int, TrendFilterFit]:
            fit = fit_trend_filter(y, k, lam, cfg, warm_start=dual[0])
            dual[0] = fit.dual
            return fit.df_estimate, fit

        _, _, fit = _bisect_log_lambda(
            fit_at, lam_hi * cfg.lambda_min_ratio, lam_hi, target_df, cfg.tune_max_iter
        )

    if fit.df_estimate != target_df:
        fit.warning = f"df target {target_df} not reached; closest df is {fit.df_estimate}"
        logger.warning("tune_to_df: %s (lambda %.4g)", fit.warning, fit.lam)
    return fit


# ----------------------------------------------------------------------
# Cross-validation
# ----------------------------------------------------------------------

def cross_validate(
    y: np.ndarray,
    k: int,
    lambda_grid: Sequence[float],
    folds: int = 5,
    cfg: Optional[FitConfig] = None,
) -> tuple[float, np.ndarray]:
    """Structured K-fold CV over interior points.

    Fold f holds out the interior points whose position is f mod `folds`;
    the retained points are refit as an evenly spaced sequence and held-out
    values are predicted by linear interpolation. Returns the lambda with
    the smallest mean held-out squared error (ties to the larger lambda)
    and the error curve in grid order.
    """
    cfg = cfg or FitConfig()
    y = np.asarray(y, dtype=np.float64)
    grid = np.asarray(lambda_grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise InputError("lambda grid must be a nonempty vector")
    if folds < 2:
        raise InputError(f"need at least 2 folds, got {folds}")
    n = y.size
    x = np.arange(1, n + 1) / n
    interior = np.arange(1, n - 1)
    if interior.size < folds or n - interior.size // folds - 1 < k + 2:
        raise InputError(f"{n} points are too few for {folds}-fold CV at order {k}")

    sq_err = np.zeros(grid.size)
    count = 0
    for f in range(folds):
        held = interior[(interior - 1) % folds == f]
        keep = np.setdiff1d(np.arange(n), held)
        for j, fit in enumerate(fit_trend_filter_path(y[keep], k, grid, cfg)):
            pred = np.interp(x[held], x[keep], fit.beta)
            sq_err[j] += float(np.sum((y[held] - pred) ** 2))
        count += held.size
    curve = sq_err / count

    best = np.flatnonzero(curve == np.min(curve))
    best_lambda = float(np.max(grid[best]))
    logger.debug("cv selected lambda %.4g over %d folds", best_lambda, folds)
    return best_lambda, curve


# ----------------------------------------------------------------------
# Locally adaptive regression splines
# ----------------------------------------------------------------------

def fit_locally_adaptive_spline(
    y: np.ndarray, k: int, lam: float, cfg: Optional[FitConfig] = None
) -> LocalSplineFit:
    """Lasso on the truncated power basis; tv is the penalty sum |theta_j|, j >= k+1."""
    y = np.asarray(y, dtype=np.float64)
    if lam < 0:
        raise InputError(f"lambda must be nonnegative, got {lam}")
    basis = make_G(y.size, k)
    theta = solve_lasso_cd(basis.entries, y, lam, basis.penalized_from, cfg)
    fitted = basis.entries @ theta
    tv = float(np.sum(np.abs(theta[basis.penalized_from:])))
    return LocalSplineFit(fitted=fitted, theta=theta, k=k, lam=lam, tv=tv)


def local_spline_lambda_max(y: np.ndarray, k: int) -> float:
    """Smallest lambda at which every penalized G coefficient is zero."""
    y = np.asarray(y, dtype=np.float64)
    basis = make_G(y.size, k)
    resid = y - polynomial_projection(y, k)
    return float(np.max(np.abs(basis.entries[:, basis.penalized_from:].T @ resid)))


def tune_local_spline_to_df(
    y: np.ndarray, k: int, target_df: int, cfg: Optional[FitConfig] = None
) -> LocalSplineFit:
    """Locally adaptive spline whose df (nonzero penalized coefficients + k + 1) is closest to target."""
    cfg = cfg or FitConfig()
    y = np.asarray(y, dtype=np.float64)
    _check_target(target_df, k, y.size)
    lam_hi = local_spline_lambda_max(y, k)
    if lam_hi == 0.0:
        return fit_locally_adaptive_spline(y, k, 0.0, cfg)

    def fit_at(lam: float) -> tuple[int, LocalSplineFit]:
        fit = fit_locally_adaptive_spline(y, k, lam, cfg)
        return fit.df_estimate, fit

    _, df, fit = _bisect_log_lambda(
        fit_at, lam_hi * cfg.lambda_min_ratio, lam_hi, target_df, cfg.tune_max_iter
    )
    if df != target_df:
        logger.warning("local spline df target %d not reached; closest df is %d", target_df, df)
    return fit


# ----------------------------------------------------------------------
# Fixed-knot refit
# ----------------------------------------------------------------------

def refit_regression_spline(y: np.ndarray, k: int, knots: Sequence[int]) -> np.ndarray:
    """Unpenalized least squares over the fits whose D^(k+1) support lies in `knots`.

    Those fits are spanned by the polynomial columns of H and the H columns
    k + 1 + i for each knot row i.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    rows = np.asarray(knots, dtype=np.intp)
    if rows.size and (rows.min() < 0 or rows.max() >= n - k - 1):
        raise InputError(f"knot rows must lie in [0, {n - k - 2}]")
    cols = np.concatenate((np.arange(k + 1), k + 1 + rows))
    design = np.empty((n, cols.size))
    unit = np.zeros(n)
    for c, col in enumerate(cols):
        unit[col] = 1.0
        design[:, c] = basis_apply(unit, k)
        unit[col] = 0.0
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return design @ coef
