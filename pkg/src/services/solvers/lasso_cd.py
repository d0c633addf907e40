"""
Coordinate descent lasso – the basis-form oracle for trend filtering.

Responsibility: minimize 1/2 ||y - X theta||^2 + lambda * sum_{j >= p0} |theta_j|
where the first p0 columns are unpenalized. Each sweep minimizes exactly
over the unpenalized block, then soft-thresholds the penalized
coordinates. Between batches of sweeps the current support, with its
negligible coordinates dropped, seeds an active-set refinement; a point
it returns satisfies the KKT conditions and is the exact minimizer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numba as nb
import numpy as np
from scipy.linalg import solve_triangular

from models.config import FitConfig
from models.errors import ConvergenceError, InputError

logger = logging.getLogger(__name__)

_FIRST_BATCH = 50
_MAX_BATCH = 2000
_REFINE_STEPS = 200
_DROP_THRESHOLDS = (0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2)


@dataclass
class LassoResult:
    coef: np.ndarray = field(repr=False)
    sweeps: int = 0
    converged: bool = False
    polished: bool = False


@nb.njit(cache=True)
def _cd_sweeps(X, theta, resid, col_sq, proj, p0, lam, tol, max_sweeps):
    n, p = X.shape
    for sweep in range(max_sweeps):
        max_delta = 0.0
        if p0 > 0:
            partial = resid + np.dot(X[:, :p0], theta[:p0])
            block = np.dot(proj, partial)
            delta = block - theta[:p0]
            resid -= np.dot(X[:, :p0], delta)
            for j in range(p0):
                theta[j] = block[j]
                change = abs(delta[j]) * np.sqrt(col_sq[j])
                if change > max_delta:
                    max_delta = change
        for j in range(p0, p):
            if col_sq[j] == 0.0:
                continue
            xj = X[:, j]
            rho = np.dot(xj, resid) + col_sq[j] * theta[j]
            mag = abs(rho) - lam
            new = np.sign(rho) * mag / col_sq[j] if mag > 0.0 else 0.0
            d = new - theta[j]
            if d != 0.0:
                resid -= d * xj
                theta[j] = new
                change = abs(d) * np.sqrt(col_sq[j])
                if change > max_delta:
                    max_delta = change
        if max_delta <= tol:
            return sweep + 1, True
    return max_sweeps, False


def _solve_on_support(
    X: np.ndarray, y: np.ndarray, cols: np.ndarray, signs: np.ndarray, lam: float
) -> Optional[np.ndarray]:
    """Stationary point of the lasso with support `cols` and fixed `signs`; None if rank deficient."""
    if cols.size > X.shape[0]:
        return None
    if cols.size == 0:
        return np.zeros(0)
    q, r = np.linalg.qr(X[:, cols])
    diag = np.abs(np.diag(r))
    if np.min(diag) <= 1e-12 * np.max(diag):
        return None
    # R^T R c = X_S^T y - lambda s
    shift = solve_triangular(r, lam * signs, trans="T")
    return solve_triangular(r, q.T @ y - shift)


def _active_set_refine(
    X: np.ndarray,
    y: np.ndarray,
    theta: np.ndarray,
    lam: float,
    p0: int,
    start: np.ndarray,
    max_steps: int,
) -> Optional[np.ndarray]:
    """Exact lasso minimizer grown from the coordinates `start` of `theta`, or None.

    Each step solves on the support, removes coordinates whose sign
    disagrees, and otherwise adds the worst KKT violator. Only a KKT-optimal
    point is returned.
    """
    p = X.shape[1]
    signs = dict(zip(start.tolist(), np.sign(theta[start]).tolist()))
    slack = lam * 1e-9 + 1e-12 * float(np.max(np.abs(X.T @ y), initial=0.0))
    for _ in range(max_steps):
        support = np.array(sorted(signs), dtype=np.intp)
        cols = np.concatenate((np.arange(p0), support))
        s = np.concatenate((np.zeros(p0), np.array([signs[j] for j in support.tolist()])))
        coef = _solve_on_support(X, y, cols, s, lam)
        if coef is None:
            return None
        wrong = support[np.sign(coef[p0:]) != s[p0:]]
        if wrong.size:
            for j in wrong.tolist():
                del signs[j]
            continue
        full = np.zeros(p)
        full[cols] = coef
        grad = X.T @ (y - X @ full)
        violation = np.abs(grad) - lam
        violation[:p0] = -np.inf
        violation[support] = -np.inf
        worst = int(np.argmax(violation)) if p > p0 else -1
        if worst < 0 or violation[worst] <= slack:
            return full
        signs[worst] = float(np.sign(grad[worst]))
    return None


def _polish(
    X: np.ndarray, y: np.ndarray, theta: np.ndarray, lam: float, p0: int, weights: np.ndarray
) -> Optional[np.ndarray]:
    """Active-set refinement seeded by `theta`, dropping more small coordinates on each try."""
    contribution = np.abs(theta[p0:]) * weights[p0:]
    scale = float(np.max(contribution, initial=0.0))
    tried: set[tuple[int, ...]] = set()
    for rel in _DROP_THRESHOLDS:
        start = np.flatnonzero(contribution > rel * scale) + p0
        key = tuple(start.tolist())
        if key in tried:
            continue
        tried.add(key)
        exact = _active_set_refine(X, y, theta, lam, p0, start, _REFINE_STEPS)
        if exact is not None:
            return exact
    return None


def lasso_cd(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    penalized_from: int,
    cfg: Optional[FitConfig] = None,
) -> LassoResult:
    """Coordinate descent with exact unpenalized block updates and KKT polishing.

    `penalized_from` is the 0-based index of the first penalized column.
    """
    cfg = cfg or FitConfig()
    X = np.asfortranarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = X.shape
    if y.shape != (n,):
        raise InputError(f"response of shape {y.shape} does not match {n} rows")
    if not 0 <= penalized_from <= p:
        raise InputError(f"penalized_from must lie in [0, {p}], got {penalized_from}")
    if lam < 0:
        raise InputError(f"lambda must be nonnegative, got {lam}")
    p0 = int(penalized_from)

    if lam == 0.0:
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        return LassoResult(coef=coef, converged=True)

    if p0:
        q, r = np.linalg.qr(X[:, :p0])
        proj = np.ascontiguousarray(solve_triangular(r, q.T))
    else:
        proj = np.zeros((0, n))
    col_sq = np.einsum("ij,ij->j", X, X)
    weights = np.sqrt(col_sq)
    theta = np.zeros(p)
    resid = y.copy()
    tol = cfg.cd_tol * max(1.0, float(np.linalg.norm(y)))

    sweeps = 0
    batch = _FIRST_BATCH
    while sweeps < cfg.cd_max_sweeps:
        done, converged = _cd_sweeps(
            X, theta, resid, col_sq, proj, p0, float(lam), tol, min(batch, cfg.cd_max_sweeps - sweeps)
        )
        sweeps += done
        exact = _polish(X, y, theta, lam, p0, weights)
        if exact is not None:
            logger.debug("lasso solved on support of size %d after %d sweeps", np.count_nonzero(exact[p0:]), sweeps)
            return LassoResult(coef=exact, sweeps=sweeps, converged=True, polished=True)
        if converged:
            return LassoResult(coef=theta, sweeps=sweeps, converged=True)
        batch = min(2 * batch, _MAX_BATCH)

    raise ConvergenceError(f"coordinate descent did not converge in {cfg.cd_max_sweeps} sweeps")


def solve_lasso_cd(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    penalized_from: int,
    cfg: Optional[FitConfig] = None,
) -> np.ndarray:
    """Lasso coefficients; see `lasso_cd`."""
    return lasso_cd(X, y, lam, penalized_from, cfg).coef
