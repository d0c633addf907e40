"""
Dataset / BenchResult – simulation inputs and aggregated benchmark outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .config import SCHEMA_VERSION
from .errors import InputError


class Scenario(str, Enum):
    HILLS = "hills"
    DOPPLER = "doppler"
    SMOOTH = "smooth"
    BLOCKS = "blocks"
    KINKS = "kinks"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Observations y_i = f0(x_i) + noise on the grid x_i = i / n."""

    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    f0: Optional[np.ndarray] = field(default=None, repr=False)
    seed: Optional[int] = None
    scenario: Scenario = Scenario.CUSTOM

    def __post_init__(self) -> None:
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise InputError("x and y must be vectors of equal length")
        if self.f0 is not None and self.f0.shape != self.y.shape:
            raise InputError("f0 must have the same length as y")
        if self.x.size > 1 and not np.all(np.diff(self.x) > 0):
            raise InputError("x must be strictly increasing")
        object.__setattr__(self, "scenario", Scenario(self.scenario))

    @property
    def n(self) -> int:
        return int(self.y.size)

    @staticmethod
    def grid(n: int) -> np.ndarray:
        return np.arange(1, n + 1, dtype=np.float64) / n


@dataclass
class BenchResult:
    """Per-method, per-df replicate losses."""

    method: str
    df_target: int
    losses: list[float] = field(default_factory=list)
    runtimes: list[float] = field(default_factory=list)
    failures: int = 0

    @property
    def mean_loss(self) -> float:
        return float(np.mean(self.losses)) if self.losses else math.nan

    @property
    def stderr(self) -> float:
        if len(self.losses) < 2:
            return math.nan
        return float(np.std(self.losses, ddof=1) / math.sqrt(len(self.losses)))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "df_target": self.df_target,
            "mean_loss": self.mean_loss,
            "stderr": self.stderr,
            "replicates": len(self.losses),
            "failures": self.failures,
            "mean_runtime": float(np.mean(self.runtimes)) if self.runtimes else math.nan,
        }


def bench_summary(results: list[BenchResult], **meta: object) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        **meta,
        "results": [r.to_dict() for r in results],
    }


class Method(str, Enum):
    """Estimators the benchmark can compare."""
    TREND_FILTER = "tf"
    SMOOTHING_SPLINE = "ss"
    LOCAL_SPLINE = "las"
    SPLIT_SPLINE = "split"

    def label(self) -> str:
        labels = {
            self.TREND_FILTER: "Trend filtering",
            self.SMOOTHING_SPLINE: "Smoothing spline",
            self.LOCAL_SPLINE: "Locally adaptive regression spline",
            self.SPLIT_SPLINE: "Split smoothing spline",
        }
        return labels[self]


@dataclass(frozen=True)
class MethodSpec:
    """A method plus its order, written `tf`, `tf:1`, `las:3`, `ss`."""

    method: Method
    k: int = 3

    @property
    def name(self) -> str:
        if self.method in (Method.TREND_FILTER, Method.LOCAL_SPLINE):
            return f"{self.method.value}:{self.k}"
        return self.method.value

    @staticmethod
    def parse(text: str) -> "MethodSpec":
        head, _, order = text.strip().partition(":")
        try:
            method = Method(head.lower())
        except ValueError:
            raise InputError(f"unknown method {head!r}; expected one of tf, ss, las, split") from None
        if not order:
            return MethodSpec(method)
        if method in (Method.SMOOTHING_SPLINE, Method.SPLIT_SPLINE) and order != "3":
            raise InputError(f"{method.label()} is cubic only")
        try:
            return MethodSpec(method, int(order))
        except ValueError:
            raise InputError(f"bad order {order!r} in method {text!r}") from None


@dataclass
class RateResult:
    """Mean loss per sample size and the fitted log-log slope."""

    k: int
    n_grid: list[int]
    mean_losses: list[float]
    c_lambda: float
    slope: float
    scenario: str = "smooth"

    @property
    def theoretical_slope(self) -> float:
        return -(2 * self.k + 2) / (2 * self.k + 3)

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "k": self.k,
            "n_grid": list(self.n_grid),
            "mean_losses": list(self.mean_losses),
            "c_lambda": self.c_lambda,
            "slope": self.slope,
            "scenario": self.scenario,
            "theoretical_slope": self.theoretical_slope,
        }
