"""
Simulation bench – test functions, losses, df-matched comparisons and the
convergence-rate check.

Responsibility: generate reproducible datasets (every draw is a function
of n, noise level and seed), score fits against the truth, run methods x
df targets x replicates, and estimate the empirical log-log slope of the
trend filtering risk.
"""

from __future__ import annotations

import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional, Sequence, TypeVar

import numpy as np
from scipy.interpolate import CubicSpline

from models.config import FitConfig, ScaleConvention
from models.dataset import BenchResult, Dataset, Method, MethodSpec, RateResult, Scenario
from models.errors import InputError, TrendFilterError
from services.estimators import fit_trend_filter, tune_local_spline_to_df, tune_to_df
from services.smoothing_spline import fit_split_smoothing_spline, tune_smoothing_spline_to_df
from services.solvers.pdip import lambda_max

logger = logging.getLogger(__name__)

# Hills: natural cubic spline, calm on [0, 0.8], three bumps on [0.8, 1].
HILLS_KNOTS = (0.0, 0.3, 0.6, 0.8, 0.85, 0.9, 0.95, 1.0)
HILLS_VALUES = (0.0, 1.0, 0.5, 2.2, 1.0, 2.4, 1.0, 2.0)
HILLS_NOISE_SD = 0.2

DOPPLER_NOISE_SD = 0.4
DOPPLER_RESTRICT_FROM = 0.175

SMOOTH_NOISE_SD = 0.5

# Rate-study truths of bounded variation in their kth derivative.
BLOCKS_BREAKS = (0.2, 0.45, 0.7)
BLOCKS_LEVELS = (0.0, 1.0, 0.3, 1.2)
BLOCKS_NOISE_SD = 0.5

KINKS_KNOTS = (0.0, 0.25, 0.5, 0.75, 1.0)
KINKS_VALUES = (0.0, 1.0, 0.2, 0.8, 0.4)
KINKS_NOISE_SD = 0.5

DEFAULT_SPLIT = 0.8

T = TypeVar("T")
R = TypeVar("R")


# ----------------------------------------------------------------------
# Test functions and generators
# ----------------------------------------------------------------------

@lru_cache(maxsize=1)
def _hills_spline() -> CubicSpline:
    return CubicSpline(np.array(HILLS_KNOTS), np.array(HILLS_VALUES), bc_type="natural")


def hills_function(x: np.ndarray) -> np.ndarray:
    return _hills_spline()(np.asarray(x, dtype=np.float64))


def doppler_function(x: np.ndarray) -> np.ndarray:
    return np.sin(4.0 / np.asarray(x, dtype=np.float64)) + 1.5


def smooth_function(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return np.sin(2 * np.pi * x) + 0.5 * x


def blocks_function(x: np.ndarray) -> np.ndarray:
    """Piecewise constant, right-continuous at its breaks."""
    idx = np.searchsorted(BLOCKS_BREAKS, np.asarray(x, dtype=np.float64), side="right")
    return np.asarray(BLOCKS_LEVELS)[idx]


def kinks_function(x: np.ndarray) -> np.ndarray:
    """Continuous piecewise linear through the kink table."""
    return np.interp(np.asarray(x, dtype=np.float64), KINKS_KNOTS, KINKS_VALUES)


def _noisy(f0: np.ndarray, noise_sd: float, seed: Optional[int]) -> np.ndarray:
    if noise_sd < 0 or not math.isfinite(noise_sd):
        raise InputError(f"noise_sd must be finite and nonnegative, got {noise_sd}")
    if noise_sd == 0:
        return f0.copy()
    rng = np.random.default_rng(seed)
    return f0 + noise_sd * rng.standard_normal(f0.size)


def gen_custom(
    f0: Callable[[np.ndarray], np.ndarray],
    n: int,
    noise_sd: float,
    seed: Optional[int] = 0,
    scenario: Scenario = Scenario.CUSTOM,
) -> Dataset:
    """y_i = f0(i / n) + N(0, noise_sd^2)."""
    if n < 2:
        raise InputError(f"need at least 2 points, got {n}")
    x = Dataset.grid(n)
    truth = np.asarray(f0(x), dtype=np.float64)
    return Dataset(x=x, y=_noisy(truth, noise_sd, seed), f0=truth, seed=seed, scenario=scenario)


def gen_doppler(n: int, noise_sd: float = DOPPLER_NOISE_SD, seed: Optional[int] = 0) -> Dataset:
    if n < 10:
        raise InputError(f"doppler needs n >= 10, got {n}")
    return gen_custom(doppler_function, n, noise_sd, seed, Scenario.DOPPLER)


def gen_hills(n: int, noise_sd: float = HILLS_NOISE_SD, seed: Optional[int] = 0) -> Dataset:
    if n < 20:
        raise InputError(f"hills needs n >= 20, got {n}")
    return gen_custom(hills_function, n, noise_sd, seed, Scenario.HILLS)


def gen_smooth(n: int, noise_sd: float = SMOOTH_NOISE_SD, seed: Optional[int] = 0) -> Dataset:
    return gen_custom(smooth_function, n, noise_sd, seed, Scenario.SMOOTH)


def gen_blocks(n: int, noise_sd: float = BLOCKS_NOISE_SD, seed: Optional[int] = 0) -> Dataset:
    return gen_custom(blocks_function, n, noise_sd, seed, Scenario.BLOCKS)


def gen_kinks(n: int, noise_sd: float = KINKS_NOISE_SD, seed: Optional[int] = 0) -> Dataset:
    return gen_custom(kinks_function, n, noise_sd, seed, Scenario.KINKS)


_GENERATORS: dict[Scenario, tuple[Callable[..., Dataset], float]] = {
    Scenario.HILLS: (gen_hills, HILLS_NOISE_SD),
    Scenario.DOPPLER: (gen_doppler, DOPPLER_NOISE_SD),
    Scenario.SMOOTH: (gen_smooth, SMOOTH_NOISE_SD),
    Scenario.BLOCKS: (gen_blocks, BLOCKS_NOISE_SD),
    Scenario.KINKS: (gen_kinks, KINKS_NOISE_SD),
}


def parse_scenario(scenario: Scenario | str) -> Scenario:
    """A scenario that has a generator."""
    try:
        parsed = Scenario(scenario)
    except ValueError:
        parsed = None
    if parsed not in _GENERATORS:
        raise InputError(
            f"unknown scenario {scenario!r}; expected hills, doppler, smooth, blocks or kinks"
        )
    return parsed


def generate(scenario: Scenario | str, n: int, noise_sd: Optional[float] = None, seed: int = 0) -> Dataset:
    """Dataset for a named scenario; noise_sd defaults per scenario."""
    generator, default_sd = _GENERATORS[parse_scenario(scenario)]
    return generator(n, default_sd if noise_sd is None else noise_sd, seed)


def default_restrict_from(scenario: Scenario | str) -> Optional[float]:
    return DOPPLER_RESTRICT_FROM if parse_scenario(scenario) is Scenario.DOPPLER else None


# ----------------------------------------------------------------------
# Loss
# ----------------------------------------------------------------------

def loss_mse(
    fit: np.ndarray,
    f0: np.ndarray,
    restrict_from: Optional[float] = None,
    x: Optional[np.ndarray] = None,
) -> float:
    """Mean squared error over the inputs x_i >= restrict_from."""
    fit = np.asarray(fit, dtype=np.float64)
    f0 = np.asarray(f0, dtype=np.float64)
    if fit.shape != f0.shape:
        raise InputError(f"fit has shape {fit.shape}, truth has {f0.shape}")
    if restrict_from is None:
        return float(np.mean((fit - f0) ** 2))
    if x is None:
        x = Dataset.grid(fit.size)
    keep = x >= restrict_from
    if not np.any(keep):
        raise InputError(f"no inputs at or beyond {restrict_from}")
    return float(np.mean((fit[keep] - f0[keep]) ** 2))


# ----------------------------------------------------------------------
# Worker pool
# ----------------------------------------------------------------------

def _pool_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int]) -> list[R]:
    """Ordered map, serial for one worker."""
    workers = threads or os.cpu_count() or 1
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------
# Benchmark
# ----------------------------------------------------------------------

@dataclass
class ReplicateRecord:
    """One fit of one method on one replicate."""

    replicate: int
    seed: int
    method: str
    df_target: int
    df: float
    loss: float
    runtime: float
    error: str = ""

    def to_row(self) -> dict:
        return {
            "replicate": self.replicate,
            "seed": self.seed,
            "method": self.method,
            "df_target": self.df_target,
            "df": self.df,
            "loss": self.loss,
            "runtime": self.runtime,
            "error": self.error,
        }


class BenchmarkService:
    """Compares estimators at matched degrees of freedom over simulated replicates.

    Replicate r draws its data with seed + r, so serial and threaded runs
    give identical numbers.
    """

    def __init__(self, cfg: Optional[FitConfig] = None, threads: Optional[int] = None) -> None:
        self._cfg = cfg or FitConfig()
        self._threads = threads

    # ------------------------------------------------------------------
    # Single fits
    # ------------------------------------------------------------------

    def fit_method(
        self,
        spec: MethodSpec,
        y: np.ndarray,
        df_target: int,
        split: float = DEFAULT_SPLIT,
        df_left: Optional[float] = None,
        df_right: Optional[float] = None,
    ) -> tuple[np.ndarray, float]:
        """Fitted values and achieved df for one method at one df target."""
        if spec.method is Method.TREND_FILTER:
            fit = tune_to_df(y, spec.k, df_target, self._cfg)
            return fit.beta, float(fit.df_estimate)
        if spec.method is Method.SMOOTHING_SPLINE:
            fit = tune_smoothing_spline_to_df(y, df_target)
            return fit.fitted, fit.df
        if spec.method is Method.LOCAL_SPLINE:
            fit = tune_local_spline_to_df(y, spec.k, df_target, self._cfg)
            return fit.fitted, float(fit.df_estimate)
        left = df_target / 2 if df_left is None else df_left
        right = df_target / 2 if df_right is None else df_right
        fitted, left_fit, right_fit = fit_split_smoothing_spline(y, split, left, right)
        return fitted, left_fit.df + right_fit.df

    # ------------------------------------------------------------------
    # Runs
    # ------------------------------------------------------------------

    def run(
        self,
        scenario: Scenario | str,
        methods: Sequence[MethodSpec],
        df_grid: Sequence[int],
        replicates: int,
        seed: int = 0,
        n: int = 128,
        noise_sd: Optional[float] = None,
        restrict_from: Optional[float] = None,
        split: float = DEFAULT_SPLIT,
        df_left: Optional[float] = None,
        df_right: Optional[float] = None,
    ) -> tuple[list[BenchResult], list[ReplicateRecord]]:
        """Aggregated results per method x df target, plus every replicate record."""
        if replicates < 1:
            raise InputError("need at least one replicate")
        if not methods or not df_grid:
            raise InputError("need at least one method and one df target")
        scenario = parse_scenario(scenario)
        if restrict_from is None:
            restrict_from = default_restrict_from(scenario)

        def replicate(r: int) -> list[ReplicateRecord]:
            data = generate(scenario, n, noise_sd, seed + r)
            records = []
            for spec in methods:
                for df_target in df_grid:
                    started = time.perf_counter()
                    try:
                        fitted, df = self.fit_method(spec, data.y, int(df_target), split, df_left, df_right)
                        loss = loss_mse(fitted, data.f0, restrict_from)
                        error = ""
                    except TrendFilterError as exc:
                        logger.warning("replicate %d, %s at df %d failed: %s", r, spec.name, df_target, exc)
                        df, loss, error = math.nan, math.nan, str(exc)
                    records.append(
                        ReplicateRecord(
                            replicate=r,
                            seed=seed + r,
                            method=spec.name,
                            df_target=int(df_target),
                            df=df,
                            loss=loss,
                            runtime=time.perf_counter() - started,
                            error=error,
                        )
                    )
            logger.debug("replicate %d done", r)
            return records

        logger.info(
            "benchmark %s: n=%d, %d replicates, methods %s, df %s",
            scenario.value, n, replicates, [s.name for s in methods], list(df_grid),
        )
        per_replicate = _pool_map(replicate, range(replicates), self._threads)
        records = [rec for batch in per_replicate for rec in batch]
        return summarize(records, methods, df_grid), records


def summarize(
    records: Sequence[ReplicateRecord], methods: Sequence[MethodSpec], df_grid: Sequence[int]
) -> list[BenchResult]:
    """One BenchResult per method x df target, replicates in replicate order."""
    results = []
    ordered = sorted(records, key=lambda rec: rec.replicate)
    for spec in methods:
        for df_target in df_grid:
            result = BenchResult(method=spec.name, df_target=int(df_target))
            for rec in ordered:
                if rec.method != spec.name or rec.df_target != int(df_target):
                    continue
                if rec.error:
                    result.failures += 1
                else:
                    result.losses.append(rec.loss)
                    result.runtimes.append(rec.runtime)
            results.append(result)
    return results


def run_benchmark(
    scenario: Scenario | str,
    methods: Sequence[MethodSpec | str],
    df_grid: Sequence[int],
    replicates: int,
    seed: int = 0,
    cfg: Optional[FitConfig] = None,
    threads: Optional[int] = None,
    **options: object,
) -> list[BenchResult]:
    """Aggregated benchmark results; see BenchmarkService.run for `options`."""
    specs = [m if isinstance(m, MethodSpec) else MethodSpec.parse(m) for m in methods]
    results, _ = BenchmarkService(cfg, threads).run(scenario, specs, df_grid, replicates, seed, **options)
    return results


# ----------------------------------------------------------------------
# Rate check
# ----------------------------------------------------------------------

def _rate_lambda(c_lambda: float, n: int, k: int, delta: float) -> float:
    return (1.0 + delta) * c_lambda * float(n) ** (1.0 / (2 * k + 3))


_RATE_TRUTHS = {0: Scenario.BLOCKS, 1: Scenario.KINKS, 3: Scenario.HILLS}


def rate_scenario(k: int) -> Scenario:
    """Truth with a bounded-variation kth derivative: blocks, kinks, hills, else smooth."""
    return _RATE_TRUTHS.get(k, Scenario.SMOOTH)


def calibrate_c_lambda(
    k: int,
    n: int = 256,
    replicates: int = 5,
    noise_sd: Optional[float] = None,
    seed: int = 0,
    cfg: Optional[FitConfig] = None,
    grid_size: int = 25,
) -> float:
    """Constant c minimizing the mean loss of lambda = c * n^(1/(2k+3)) at one n."""
    cfg = (cfg or FitConfig()).with_updates(scale=ScaleConvention.GRID_SCALED)
    datasets = [generate(rate_scenario(k), n, noise_sd, seed + r) for r in range(replicates)]
    c_top = lambda_max(datasets[0].y, k) / _rate_lambda(1.0, n, k, cfg.delta)
    grid = c_top * np.logspace(-6, 0, grid_size)
    losses = []
    for c in grid:
        lam = _rate_lambda(float(c), n, k, cfg.delta)
        losses.append(np.mean([loss_mse(fit_trend_filter(d.y, k, lam, cfg).beta, d.f0) for d in datasets]))
    best = float(grid[int(np.argmin(losses))])
    logger.info("calibrated c_lambda=%.4g at n=%d for k=%d", best, n, k)
    return best


def rate_study(
    k: int,
    n_grid: Sequence[int],
    replicates: int,
    c_lambda: Optional[float] = None,
    noise_sd: Optional[float] = None,
    seed: int = 0,
    cfg: Optional[FitConfig] = None,
    threads: Optional[int] = None,
) -> RateResult:
    """Mean trend filtering loss along n_grid with lambda = c * n^(1/(2k+3)).

    The truth is `rate_scenario(k)` at its default noise level unless
    `noise_sd` is given. The slope is the least-squares fit of log mean loss
    on log n; it is NaN when some mean loss is zero (noiseless data).
    """
    ns = sorted(int(n) for n in n_grid)
    if len(ns) < 2 or ns[-1] < 10 * ns[0]:
        raise InputError("n grid must span at least one decade")
    if replicates < 1:
        raise InputError("need at least one replicate")
    scenario = rate_scenario(k)
    cfg = (cfg or FitConfig()).with_updates(scale=ScaleConvention.GRID_SCALED)
    if c_lambda is None:
        c_lambda = calibrate_c_lambda(k, noise_sd=noise_sd, seed=seed, cfg=cfg)

    def replicate_losses(n: int) -> float:
        lam = _rate_lambda(c_lambda, n, k, cfg.delta)

        def one(r: int) -> float:
            data = generate(scenario, n, noise_sd, seed + r)
            return loss_mse(fit_trend_filter(data.y, k, lam, cfg).beta, data.f0)

        return float(np.mean(_pool_map(one, range(replicates), threads)))

    means = [replicate_losses(n) for n in ns]
    if min(means) <= 0.0:
        logger.warning("zero loss on the grid; slope is undefined")
        slope = math.nan
    else:
        slope = float(np.polyfit(np.log(ns), np.log(means), 1)[0])
    logger.info(
        "rate k=%d on %s: slope %.3f (theory %.3f)", k, scenario.value, slope, -(2 * k + 2) / (2 * k + 3)
    )
    return RateResult(
        k=k, n_grid=ns, mean_losses=means, c_lambda=float(c_lambda), slope=slope, scenario=scenario.value
    )


def rate_check(
    k: int,
    n_grid: Sequence[int],
    replicates: int,
    c_lambda: Optional[float] = None,
    **options: object,
) -> float:
    """Empirical log-log slope of the trend filtering risk in n."""
    return rate_study(k, n_grid, replicates, c_lambda, **options).slope
