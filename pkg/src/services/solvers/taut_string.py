"""
Direct total variation denoising (k = 0).

Responsibility: exact, non-iterative solution of
min 1/2 ||y - beta||^2 + lambda * sum |beta_{i+1} - beta_i|, used as the
ground truth for the order-zero solvers. The scan keeps the running
segment's admissible value range [vmin, vmax] and the dual bounds, and
emits a segment each time a jump becomes unavoidable; O(n) in practice.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from models.errors import InputError


@nb.njit(cache=True)
def _fill(out, start, stop, value):
    for i in range(start, stop + 1):
        out[i] = value
    return stop + 1


@nb.njit(cache=True)
def _tv_denoise(y, lam, out):
    n = y.size
    k = 0
    k0 = 0
    kplus = 0
    kminus = 0
    umin = lam
    umax = -lam
    vmin = y[0] - lam
    vmax = y[0] + lam
    twolam = 2.0 * lam
    minlam = -lam
    done = False
    while not done:
        if k == n - 1:
            if umin < 0.0:
                # vmin too high, negative jump
                k0 = _fill(out, k0, kminus, vmin)
                k = k0
                kminus = k0
                vmin = y[k0]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                # vmax too low, positive jump
                k0 = _fill(out, k0, kplus, vmax)
                k = k0
                kplus = k0
                vmax = y[k0]
                umax = minlam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                _fill(out, k0, k, vmin)
                done = True
            continue
        umin += y[k + 1] - vmin
        if umin < minlam:
            k0 = _fill(out, k0, kminus, vmin)
            k = k0
            kminus = k0
            kplus = k0
            vmin = y[k0]
            vmax = vmin + twolam
            umin = lam
            umax = minlam
            continue
        umax += y[k + 1] - vmax
        if umax > lam:
            k0 = _fill(out, k0, kplus, vmax)
            k = k0
            kminus = k0
            kplus = k0
            vmax = y[k0]
            vmin = vmax - twolam
            umin = lam
            umax = minlam
            continue
        k += 1
        if umin >= lam:
            kminus = k
            vmin += (umin - lam) / (kminus - k0 + 1)
            umin = lam
        if umax <= minlam:
            kplus = k
            vmax += (umax + lam) / (kplus - k0 + 1)
            umax = minlam


def solve_tf_tautstring(y: np.ndarray, lam: float) -> np.ndarray:
    """Order-zero trend filtering (1d fused lasso) solved exactly."""
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.ndim != 1:
        raise InputError("y must be a vector")
    if lam < 0 or not np.isfinite(lam):
        raise InputError(f"lambda must be finite and nonnegative, got {lam}")
    if lam == 0.0 or y.size < 2:
        return y.copy()
    out = np.empty_like(y)
    _tv_denoise(y, float(lam), out)
    return out
