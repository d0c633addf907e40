"""
ADMM – sparse and mixed trend filtering.

Responsibility: minimize 1/2 ||y - beta||^2 + sum_i lambda_i ||D_i beta||_1
for two penalties (D_i a difference operator or the identity) with one
splitting variable per penalty. The beta-update is a banded SPD solve of
(I + rho * sum_i D_i^T D_i); rho adapts by residual balancing.

Both variants take lambda in raw units: no n^k / k! factor is applied.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from models.banded import BandedMatrix
from models.config import FitConfig
from models.diff_op import DiffOp
from models.errors import ConvergenceError, InputError
from services.banded_linalg import (
    BandedCholesky,
    band_add_diagonal,
    band_cholesky_factor,
    band_gram,
    band_sum,
)
from services.diff_ops import make_diff_op

logger = logging.getLogger(__name__)

_BALANCE_RATIO = 10.0
_RHO_FACTOR = 2.0
_BALANCE_EVERY = 10


@dataclass(frozen=True)
class _Penalty:
    weight: float
    op: Optional[DiffOp] = None   # None is the identity

    def apply(self, v: np.ndarray) -> np.ndarray:
        return v if self.op is None else self.op.apply(v)

    def apply_transpose(self, w: np.ndarray) -> np.ndarray:
        return w if self.op is None else self.op.apply_transpose(w)


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Elementwise proximal map of t * ||.||_1."""
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _scaled(a: BandedMatrix, c: float) -> BandedMatrix:
    return BandedMatrix(a.n_rows, a.n_cols, a.lower_bw, a.upper_bw, a.bands * c)


def _factor_system(
    n: int, penalties: Sequence[_Penalty], grams: Sequence[Optional[BandedMatrix]], rho: float
) -> BandedCholesky:
    terms = [_scaled(g, rho) for g in grams if g is not None]
    n_identity = sum(1 for p in penalties if p.op is None)
    if terms:
        system = band_add_diagonal(band_sum(*terms), 1.0 + rho * n_identity)
    else:
        system = BandedMatrix.from_diagonals([np.full(n, 1.0 + rho * n_identity)], [0], (n, n))
    return band_cholesky_factor(system)


def _admm(y: np.ndarray, penalties: Sequence[_Penalty], cfg: FitConfig) -> np.ndarray:
    n = y.size
    rho = cfg.admm_rho
    tol = cfg.admm_tol * math.sqrt(n)
    grams = [None if p.op is None else band_gram(p.op.matrix) for p in penalties]
    factor = _factor_system(n, penalties, grams, rho)

    beta = y.copy()
    z = [p.apply(beta).copy() for p in penalties]
    u = [np.zeros_like(zi) for zi in z]
    history: list[tuple[float, float]] = []

    for iteration in range(1, cfg.admm_max_iter + 1):
        rhs = y.copy()
        for p, zi, ui in zip(penalties, z, u):
            rhs += rho * p.apply_transpose(zi - ui)
        beta = factor.solve(rhs)

        r_sq = 0.0
        dual_change = np.zeros(n)
        for i, p in enumerate(penalties):
            d = p.apply(beta)
            z_new = soft_threshold(d + u[i], p.weight / rho)
            u[i] = u[i] + d - z_new
            r_sq += float(np.dot(d - z_new, d - z_new))
            dual_change += p.apply_transpose(z_new - z[i])
            z[i] = z_new
        r_norm = math.sqrt(r_sq)
        s_norm = rho * float(np.linalg.norm(dual_change))
        history.append((r_norm, s_norm))

        if r_norm <= tol and s_norm <= tol:
            logger.debug("admm converged in %d iterations (rho %.3g)", iteration, rho)
            return beta

        if iteration % _BALANCE_EVERY == 0:
            if r_norm > _BALANCE_RATIO * s_norm:
                rho *= _RHO_FACTOR
                u = [ui / _RHO_FACTOR for ui in u]
                factor = _factor_system(n, penalties, grams, rho)
            elif s_norm > _BALANCE_RATIO * r_norm:
                rho /= _RHO_FACTOR
                u = [ui * _RHO_FACTOR for ui in u]
                factor = _factor_system(n, penalties, grams, rho)

    logger.warning("admm stopped after %d iterations, residuals %.3g / %.3g", cfg.admm_max_iter, *history[-1])
    raise ConvergenceError(
        f"ADMM did not reach residual {tol:.3g} in {cfg.admm_max_iter} iterations",
        history=history,
    )


def _check_weights(*weights: float) -> None:
    for w in weights:
        if w < 0 or not math.isfinite(w):
            raise InputError(f"penalty weights must be finite and nonnegative, got {w}")


def _run(y: np.ndarray, penalties: Sequence[_Penalty], cfg: FitConfig) -> np.ndarray:
    """ADMM over the penalties with a positive weight."""
    active = [p for p in penalties if p.weight > 0.0]
    if not active:
        return y.copy()
    return _admm(y, active, cfg)


def solve_sparse_tf(
    y: np.ndarray, k: int, lambda1: float, lambda2: float, cfg: Optional[FitConfig] = None
) -> np.ndarray:
    """Sparse trend filtering: lambda1 ||D^(k+1) beta||_1 + lambda2 ||beta||_1."""
    cfg = cfg or FitConfig()
    y = np.asarray(y, dtype=np.float64)
    _check_weights(lambda1, lambda2)
    op = make_diff_op(y.size, k + 1)
    if lambda1 == 0.0:
        return soft_threshold(y, lambda2)
    return _run(y, [_Penalty(lambda1, op), _Penalty(lambda2)], cfg)


def solve_mixed_tf(
    y: np.ndarray,
    k1: int,
    k2: int,
    lambda1: float,
    lambda2: float,
    cfg: Optional[FitConfig] = None,
) -> np.ndarray:
    """Mixed trend filtering: lambda1 ||D^(k1+1) beta||_1 + lambda2 ||D^(k2+1) beta||_1."""
    cfg = cfg or FitConfig()
    y = np.asarray(y, dtype=np.float64)
    if k1 == k2:
        raise InputError("mixed trend filtering needs two different orders")
    _check_weights(lambda1, lambda2)
    op1 = make_diff_op(y.size, k1 + 1)
    op2 = make_diff_op(y.size, k2 + 1)
    return _run(y, [_Penalty(lambda1, op1), _Penalty(lambda2, op2)], cfg)
