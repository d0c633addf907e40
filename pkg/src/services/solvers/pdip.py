"""
Interior point solver – trend filtering at a fixed lambda.

Responsibility: solve the box-constrained dual

    min_z 1/2 ||y - D^T z||^2   s.t.  |z_i| <= lambda

with D = D^(k+1) by a primal-dual log-barrier method and recover the
primal fit as beta = y - D^T z. Every Newton step factors D D^T plus a
positive diagonal, a banded SPD matrix, so one iteration costs O(n k^2).
"""

from __future__ import annotations

import logging
import time
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from models.banded import BandedMatrix
from models.config import FitConfig, ScaleConvention
from models.diff_op import DiffOp
from models.errors import ConvergenceError, InputError, NotPositiveDefiniteError
from models.problem import SolverDiagnostics, TFProblem, lambda_scale_factor
from services.banded_linalg import (
    BandedCholesky,
    band_add_diagonal,
    band_cholesky_factor,
    band_cholesky_solve,
    principal_submatrix,
)
from services.diff_ops import diff_gram, make_diff_op, polynomial_projection

logger = logging.getLogger(__name__)

_INITIAL_T = 1e-10
_T_GROWTH = 1.2
_FULL_STEP = 0.2
_BOUNDARY_FRACTION = 0.99
_WARM_START_SHRINK = 0.999


# ----------------------------------------------------------------------
# Dual helpers
# ----------------------------------------------------------------------

def dual_from_residual(op: DiffOp, r: np.ndarray) -> np.ndarray:
    """The unique z with D^T z = r, for r orthogonal to degree-k polynomials.

    D^T is lower triangular Toeplitz in its first n - k - 1 rows, so z
    follows by forward substitution (an all-pole filter), never touching
    the badly conditioned D D^T.
    """
    return lfilter([1.0], op.coefficients.astype(np.float64), r[: op.n_rows])


def lambda_max(
    y: np.ndarray, k: int, scale: ScaleConvention = ScaleConvention.GRID_SCALED
) -> float:
    """Smallest lambda (in the caller's units) whose fit is the degree-k polynomial."""
    y = np.asarray(y, dtype=np.float64)
    op = make_diff_op(y.size, k + 1)
    z = dual_from_residual(op, y - polynomial_projection(y, k))
    return float(np.max(np.abs(z))) / lambda_scale_factor(y.size, k, scale)


def _primal_objective(y: np.ndarray, beta: np.ndarray, d_beta: np.ndarray, lam: float) -> float:
    return 0.5 * float(np.dot(y - beta, y - beta)) + lam * float(np.sum(np.abs(d_beta)))


def _dual_objective(dtz: np.ndarray, dy: np.ndarray, z: np.ndarray) -> float:
    return -0.5 * float(np.dot(dtz, dtz)) + float(np.dot(dy, z))


def _relative(gap: float, pobj: float, dobj: float) -> float:
    return gap / max(abs(pobj), abs(dobj), np.finfo(np.float64).tiny)


# ----------------------------------------------------------------------
# Newton system
# ----------------------------------------------------------------------

def _factor_newton(system: BandedMatrix) -> BandedCholesky:
    try:
        return band_cholesky_factor(system)
    except NotPositiveDefiniteError as exc:
        # D D^T is numerically singular for large n and k
        ridge = 1e-14 * float(np.max(np.abs(system.diagonal(0))))
        logger.debug("Newton matrix lost definiteness at pivot %d, ridge %.3g", exc.pivot, ridge)
        return band_cholesky_factor(band_add_diagonal(system, ridge))


# ----------------------------------------------------------------------
# Active-set polishing
# ----------------------------------------------------------------------

def _candidate_active_sets(
    z: np.ndarray, mu1: np.ndarray, mu2: np.ndarray, d_beta: np.ndarray, lam: float
) -> list[np.ndarray]:
    candidates: list[np.ndarray] = []
    mult = np.where(z >= 0, mu1, mu2)
    slack = lam - np.abs(z)
    if mult.size and np.max(mult) > 0:
        candidates.append(mult / np.max(mult) > slack / lam)
    scale = float(np.max(np.abs(d_beta))) if d_beta.size else 0.0
    for tau in (1e-8, 1e-6, 1e-4):
        candidates.append(np.abs(d_beta) > tau * scale if scale > 0 else np.zeros_like(z, dtype=bool))
    unique: list[np.ndarray] = []
    for mask in candidates:
        if not any(np.array_equal(mask, seen) for seen in unique):
            unique.append(mask)
    return unique


def polish(
    y: np.ndarray,
    op: DiffOp,
    gram: BandedMatrix,
    lam: float,
    z: np.ndarray,
    mu1: np.ndarray,
    mu2: np.ndarray,
) -> Optional[tuple[np.ndarray, np.ndarray]]:
    """Exact solution from a guessed active set, or None if KKT fails.

    Dual coordinates on the active set are fixed at lambda * sign(z); the
    free ones solve (D D^T)[I, I] z_I = D_I (y - D_A^T z_A).
    """
    beta = y - op.apply_transpose(z)
    d_beta = op.apply(beta)
    dy = op.apply(y)
    gram_norm = float(np.max(np.sum(np.abs(gram.bands), axis=0)))
    kkt_tol = 1e-9 * float(np.max(np.abs(dy))) + 100 * np.finfo(np.float64).eps * gram_norm * lam
    p_old = _primal_objective(y, beta, d_beta, lam)

    for active in _candidate_active_sets(z, mu1, mu2, d_beta, lam):
        signs = np.sign(z[active])
        signs[signs == 0] = 1.0
        z_new = np.zeros_like(z)
        z_new[active] = lam * signs
        free = np.flatnonzero(~active)
        if free.size:
            rhs = op.apply(y - op.apply_transpose(z_new))[free]
            try:
                z_new[free] = band_cholesky_solve(principal_submatrix(gram, free), rhs)
            except NotPositiveDefiniteError:
                continue
        if np.max(np.abs(z_new)) > lam * (1 + 1e-9):
            continue
        beta_new = y - op.apply_transpose(z_new)
        d_new = op.apply(beta_new)
        if free.size and np.max(np.abs(d_new[free])) > kkt_tol:
            continue
        if np.any(active) and np.min(signs * d_new[active]) < -kkt_tol:
            continue
        if _primal_objective(y, beta_new, d_new, lam) > p_old + 1e-12 * max(abs(p_old), 1.0):
            continue
        return beta_new, z_new
    return None


# ----------------------------------------------------------------------
# Solver
# ----------------------------------------------------------------------

def solve_tf_pdip(
    problem: TFProblem,
    cfg: Optional[FitConfig] = None,
    warm_start: Optional[np.ndarray] = None,
) -> tuple[np.ndarray, np.ndarray, SolverDiagnostics]:
    """Fit trend filtering by the primal-dual interior point method.

    Returns (beta, dual, diagnostics). `warm_start` is a previous dual
    vector; it is clipped strictly inside the new box.
    """
    cfg = cfg or FitConfig()
    started = time.perf_counter()
    y = problem.y
    n, k = problem.n, problem.k
    lam = problem.lambda_eff
    op = make_diff_op(n, k + 1)
    m = op.n_rows
    diag = SolverDiagnostics()

    if lam == 0.0:
        diag.converged = True
        diag.wall_time = time.perf_counter() - started
        return y.copy(), np.zeros(m), diag

    poly = polynomial_projection(y, k)
    z_max = dual_from_residual(op, y - poly)
    if lam >= float(np.max(np.abs(z_max))) * (1 - 1e-12):
        resid = y - poly
        diag.primal_obj = diag.dual_obj = 0.5 * float(np.dot(resid, resid))
        diag.converged = True
        diag.wall_time = time.perf_counter() - started
        logger.debug("lambda %.4g is above lambda_max; polynomial fit", lam)
        return poly, z_max, diag

    gram = diff_gram(op)
    dy = op.apply(y)
    try:
        gram_factor: Optional[BandedCholesky] = band_cholesky_factor(gram)
    except NotPositiveDefiniteError:
        gram_factor = None

    if warm_start is not None:
        warm = np.asarray(warm_start, dtype=np.float64)
        if warm.shape != (m,):
            raise InputError(f"warm start has shape {warm.shape}, expected ({m},)")
        z = np.clip(warm, -_WARM_START_SHRINK * lam, _WARM_START_SHRINK * lam)
    else:
        z = np.zeros(m)
    mu1 = np.ones(m)
    mu2 = np.ones(m)
    f1 = z - lam
    f2 = -z - lam
    t = _INITIAL_T
    step = np.inf
    gap = rel_gap = np.inf
    pobj = dobj = np.nan
    history: list[tuple[float, float]] = []

    iteration = 0
    while True:
        dtz = op.apply_transpose(z)
        ddtz = op.apply(dtz)
        w = dy - (mu1 - mu2)
        pobj2 = 0.5 * float(np.dot(dtz, dtz)) + lam * float(np.sum(np.abs(dy - ddtz)))
        pobj1 = np.inf
        if gram_factor is not None:
            pobj1 = 0.5 * float(np.dot(w, gram_factor.solve(w))) + lam * float(np.sum(mu1 + mu2))
        pobj = min(pobj1, pobj2)
        dobj = _dual_objective(dtz, dy, z)
        gap = pobj - dobj
        rel_gap = _relative(gap, pobj, dobj)
        history.append((gap, rel_gap))
        diag.objective_history.append((pobj, dobj))
        if rel_gap <= cfg.tol:
            diag.converged = True
            break
        if iteration >= cfg.max_iter:
            break
        iteration += 1

        if step >= _FULL_STEP:
            t = max(2 * m * cfg.mu / gap, _T_GROWTH * t)

        inv_t = 1.0 / t
        system = band_add_diagonal(gram, -(mu1 / f1 + mu2 / f2))
        r = -ddtz + dy + inv_t / f1 - inv_t / f2
        dz = _factor_newton(system).solve(r)
        dmu1 = -(mu1 + (inv_t + dz * mu1) / f1)
        dmu2 = -(mu2 + (inv_t - dz * mu2) / f2)
        residual = np.linalg.norm(np.concatenate((ddtz - w, -mu1 * f1 - inv_t, -mu2 * f2 - inv_t)))

        step = 1.0
        neg1 = dmu1 < 0
        if np.any(neg1):
            step = min(step, _BOUNDARY_FRACTION * float(np.min(-mu1[neg1] / dmu1[neg1])))
        neg2 = dmu2 < 0
        if np.any(neg2):
            step = min(step, _BOUNDARY_FRACTION * float(np.min(-mu2[neg2] / dmu2[neg2])))

        for _ in range(cfg.max_ls_iter):
            new_z = z + step * dz
            new_mu1 = mu1 + step * dmu1
            new_mu2 = mu2 + step * dmu2
            new_f1 = new_z - lam
            new_f2 = -new_z - lam
            if max(np.max(new_f1), np.max(new_f2)) < 0:
                new_ddtz = op.apply(op.apply_transpose(new_z))
                new_residual = np.linalg.norm(
                    np.concatenate(
                        (
                            new_ddtz - dy + new_mu1 - new_mu2,
                            -new_mu1 * new_f1 - inv_t,
                            -new_mu2 * new_f2 - inv_t,
                        )
                    )
                )
                if new_residual <= (1 - cfg.ls_alpha * step) * residual:
                    break
            step *= cfg.ls_beta
        else:
            logger.debug("line search exhausted at iteration %d (step %.3g)", iteration, step)
            if max(np.max(new_f1), np.max(new_f2)) >= 0:
                continue
        z, mu1, mu2, f1, f2 = new_z, new_mu1, new_mu2, new_f1, new_f2

    beta = y - op.apply_transpose(z)
    diag.iterations = iteration
    diag.duality_gap = max(gap, 0.0)
    diag.relative_gap = max(rel_gap, 0.0)
    diag.primal_obj = pobj
    diag.dual_obj = dobj

    if cfg.polish:
        polished = polish(y, op, gram, lam, z, mu1, mu2)
        if polished is not None:
            beta, z = polished
            d_beta = op.apply(beta)
            dtz = op.apply_transpose(z)
            pobj = _primal_objective(y, beta, d_beta, lam)
            dobj = _dual_objective(dtz, dy, z)
            diag.primal_obj, diag.dual_obj = pobj, dobj
            diag.duality_gap = max(pobj - dobj, 0.0)
            diag.relative_gap = _relative(diag.duality_gap, pobj, dobj)
            diag.polished = True
            diag.converged = True

    diag.wall_time = time.perf_counter() - started
    if not diag.converged:
        logger.warning(
            "interior point stopped after %d iterations, relative gap %.3g", iteration, diag.relative_gap
        )
        raise ConvergenceError(
            f"interior point did not reach relative gap {cfg.tol:g} in {cfg.max_iter} iterations "
            f"(gap {diag.relative_gap:.3g})",
            diagnostics=diag,
            history=history,
        )
    logger.debug(
        "pdip n=%d k=%d iterations=%d gap=%.3g polished=%s time=%.3fs",
        n, k, iteration, diag.duality_gap, diag.polished, diag.wall_time,
    )
    return beta, z, diag


def solve_tf_path(
    y: np.ndarray,
    k: int,
    lambdas: Sequence[float],
    cfg: Optional[FitConfig] = None,
) -> list[tuple[np.ndarray, np.ndarray, SolverDiagnostics]]:
    """Solve on a lambda grid, largest first, reusing each dual as the next warm start.

    Results come back in the order of `lambdas`.
    """
    cfg = cfg or FitConfig()
    grid = np.asarray(lambdas, dtype=np.float64)
    if grid.ndim != 1 or grid.size == 0:
        raise InputError("lambda grid must be a nonempty vector")
    results: list = [None] * grid.size
    dual: Optional[np.ndarray] = None
    for idx in np.argsort(-grid, kind="stable"):
        problem = TFProblem(y=y, k=k, lam=float(grid[idx]), scale=cfg.scale)
        beta, dual, diag = solve_tf_pdip(problem, cfg, warm_start=dual)
        results[idx] = (beta, dual, diag)
    return results
