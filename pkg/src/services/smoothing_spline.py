"""
Smoothing spline – cubic smoothing spline on evenly spaced inputs.

Responsibility: the linear-smoother comparator for trend filtering.
Fitted values are u = (I + lambda K)^{-1} y with
K = D2^T C^{-1} D2 / n^3, D2 the second difference operator and C the
tridiagonal matrix with 2/3 on the diagonal and 1/6 beside it. The
Reinsch scheme solves the pentadiagonal system

    (n^3 C + lambda D2 D2^T) gamma = D2 y,    u = y - lambda D2^T gamma.
"""

from __future__ import annotations

import logging
import math
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from models.banded import BandedMatrix
from models.errors import InputError
from models.fit import SmoothingSplineFit
from services.banded_linalg import BandedCholesky, band_cholesky_factor, band_sum
from services.diff_ops import diff_gram, make_diff_op

logger = logging.getLogger(__name__)

DENSE_TRACE_MAX_N = 5000
_TRACE_BLOCK = 256
_HUTCHINSON_PROBES = 64
_BRACKET_STEP = 10.0
# bracket limit on log lambda; exp(600) times the penalty bands stays finite
_MAX_LOG_LAMBDA = 600.0


def _check_n(n: int) -> None:
    if n < 4:
        raise InputError(f"smoothing spline needs at least 4 points, got {n}")


def _tridiagonal_c(m: int) -> BandedMatrix:
    return BandedMatrix.from_diagonals(
        [np.full(m - 1, 1 / 6), np.full(m, 2 / 3), np.full(m - 1, 1 / 6)],
        [-1, 0, 1],
        (m, m),
    )


def _reinsch_factor(n: int, lam: float) -> tuple[BandedCholesky, BandedMatrix]:
    """Factor of n^3 C + lambda D2 D2^T, and C."""
    c = _tridiagonal_c(n - 2)
    gram = diff_gram(make_diff_op(n, 2))
    scaled_c = BandedMatrix(c.n_rows, c.n_cols, 1, 1, c.bands * float(n) ** 3)
    scaled_gram = BandedMatrix(gram.n_rows, gram.n_cols, gram.lower_bw, gram.upper_bw, gram.bands * lam)
    return band_cholesky_factor(band_sum(scaled_c, scaled_gram)), c


def df_smoothing_spline(lam: float, n: int, seed: int = 0) -> float:
    """trace((I + lambda K)^{-1}) = 2 + n^3 trace(M^{-1} C).

    Exact by blocks of right-hand sides for n <= 5000, a seeded Hutchinson
    estimate with Rademacher probes beyond.
    """
    _check_n(n)
    if lam < 0:
        raise InputError(f"lambda must be nonnegative, got {lam}")
    if lam == 0.0:
        return float(n)
    factor, c = _reinsch_factor(n, lam)
    m = n - 2
    c_sparse = c.to_sparse().tocsc()
    if n <= DENSE_TRACE_MAX_N:
        trace = 0.0
        for start in range(0, m, _TRACE_BLOCK):
            stop = min(start + _TRACE_BLOCK, m)
            block = factor.solve(c_sparse[:, start:stop].toarray())
            trace += float(np.trace(block[start:stop]))
    else:
        rng = np.random.default_rng(seed)
        probes = rng.choice([-1.0, 1.0], size=(m, _HUTCHINSON_PROBES))
        solved = factor.solve(c_sparse @ probes)
        trace = float(np.mean(np.einsum("ij,ij->j", probes, solved)))
    return 2.0 + float(n) ** 3 * trace


def fit_smoothing_spline(y: np.ndarray, lam: float, compute_df: bool = True) -> SmoothingSplineFit:
    """Cubic smoothing spline at a fixed lambda."""
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    _check_n(n)
    if lam < 0 or not math.isfinite(lam):
        raise InputError(f"lambda must be finite and nonnegative, got {lam}")
    if lam == 0.0:
        return SmoothingSplineFit(fitted=y.copy(), lam=0.0, df=float(n))
    op = make_diff_op(n, 2)
    factor, _ = _reinsch_factor(n, lam)
    gamma = factor.solve(op.apply(y))
    fitted = y - lam * op.apply_transpose(gamma)
    df = df_smoothing_spline(lam, n) if compute_df else math.nan
    return SmoothingSplineFit(fitted=fitted, lam=lam, df=df)


def tune_smoothing_spline_to_df(y: np.ndarray, target_df: float) -> SmoothingSplineFit:
    """Smoothing spline whose df equals `target_df` (root finding on log lambda)."""
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    _check_n(n)
    if not 2 < target_df <= n:
        raise InputError(f"smoothing spline df must lie in (2, {n}], got {target_df}")
    if target_df == n:
        return fit_smoothing_spline(y, 0.0)

    def excess(log_lam: float) -> float:
        return df_smoothing_spline(math.exp(log_lam), n) - target_df

    lo = math.log(float(n) ** 3 * 1e-8)
    hi = math.log(float(n) ** 7 * 1e4)
    while excess(lo) < 0:
        lo -= _BRACKET_STEP
        if lo < -_MAX_LOG_LAMBDA:
            raise InputError(f"cannot bracket smoothing spline df {target_df}: df stays below it")
    while excess(hi) > 0:
        hi += _BRACKET_STEP
        if hi > _MAX_LOG_LAMBDA:
            raise InputError(
                f"cannot bracket smoothing spline df {target_df}: too close to the linear limit 2"
            )
    log_lam = brentq(excess, lo, hi, xtol=1e-10)
    fit = fit_smoothing_spline(y, math.exp(log_lam))
    logger.debug("smoothing spline tuned to df %.3f at lambda %.4g", fit.df, fit.lam)
    return fit


def fit_split_smoothing_spline(
    y: np.ndarray,
    split: float,
    df_left: float,
    df_right: float,
    x: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, SmoothingSplineFit, SmoothingSplineFit]:
    """Two independent df-tuned smoothing splines on [0, split] and (split, 1], concatenated."""
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if x is None:
        x = np.arange(1, n + 1) / n
    if not 0.0 < split < 1.0:
        raise InputError(f"split must lie in (0, 1), got {split}")
    cut = int(np.searchsorted(x, split, side="right"))
    if cut < 4 or n - cut < 4:
        raise InputError(f"split {split} leaves fewer than 4 points on one side")
    left = tune_smoothing_spline_to_df(y[:cut], df_left)
    right = tune_smoothing_spline_to_df(y[cut:], df_right)
    return np.concatenate((left.fitted, right.fitted)), left, right
