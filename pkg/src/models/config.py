"""
Configuration models.

Responsibility: hold solver tolerances (FitConfig) and the parsed command
line (RunConfig). Validation only; no I/O.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from typing import Optional

from .errors import InputError


SCHEMA_VERSION = 1


class ScaleConvention(str, Enum):
    """Whether lambda is multiplied by n^k / k! before it weighs the penalty."""
    GRID_SCALED = "grid_scaled"
    RAW = "raw"


@dataclass(frozen=True)
class FitConfig:
    """Solver and estimator settings shared by every fit."""

    # interior point
    tol: float = 1e-8
    max_iter: int = 200
    mu: float = 10.0
    ls_alpha: float = 0.01
    ls_beta: float = 0.5
    max_ls_iter: int = 50
    polish: bool = True

    # estimators
    knot_tol: float = 1e-5
    scale: ScaleConvention = ScaleConvention.GRID_SCALED
    lambda_min_ratio: float = 1e-8
    tune_max_iter: int = 80
    delta: float = 0.0

    # ADMM
    admm_tol: float = 1e-6
    admm_max_iter: int = 20000
    admm_rho: float = 1.0

    # coordinate descent
    cd_tol: float = 1e-12
    cd_max_sweeps: int = 200000

    def __post_init__(self) -> None:
        if self.tol <= 0 or self.admm_tol <= 0 or self.cd_tol <= 0:
            raise InputError("tolerances must be positive")
        if min(self.max_iter, self.max_ls_iter, self.admm_max_iter, self.cd_max_sweeps, self.tune_max_iter) < 1:
            raise InputError("iteration caps must be at least 1")
        if self.knot_tol < 0:
            raise InputError("knot_tol must be nonnegative")
        if not 0 < self.lambda_min_ratio < 1:
            raise InputError("lambda_min_ratio must lie in (0, 1)")
        if self.delta < 0:
            raise InputError("delta must be nonnegative")
        object.__setattr__(self, "scale", ScaleConvention(self.scale))

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def with_updates(self, **kwargs: object) -> "FitConfig":
        """Return a copy with the given non-None fields overwritten."""
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    # ------------------------------------------------------------------
    # Serialisation
    # ------------------------------------------------------------------

    def to_dict(self) -> dict:
        data = asdict(self)
        data["scale"] = self.scale.value
        return data

    @staticmethod
    def from_dict(data: dict[str, object]) -> "FitConfig":
        known = set(FitConfig.__dataclass_fields__)
        return FitConfig(**{k: v for k, v in data.items() if k in known})


class Command(str, Enum):
    FIT = "fit"
    TUNE = "tune"
    SIMULATE = "simulate"
    BENCH = "bench"
    RATE = "rate"
    SPARSE = "sparse"
    MIXED = "mixed"


@dataclass
class RunConfig:
    """Everything one CLI invocation needs."""

    command: Command
    output_path: str
    input_path: Optional[str] = None
    k: int = 1
    lambda_: Optional[float] = None
    df_target: Optional[int] = None
    scenario: str = "hills"
    n: int = 128
    noise_sd: Optional[float] = None
    reps: int = 1
    seed: int = 0
    threads: Optional[int] = None
    restrict_from: Optional[float] = None
    methods: list[str] = field(default_factory=lambda: ["tf:3", "ss"])
    df_grid: list[int] = field(default_factory=list)
    n_grid: list[int] = field(default_factory=lambda: [64, 128, 256, 512, 1024])
    c_lambda: Optional[float] = None
    lambda1: Optional[float] = None
    lambda2: Optional[float] = None
    k1: Optional[int] = None
    k2: Optional[int] = None
    split: Optional[float] = None
    df_left: Optional[int] = None
    df_right: Optional[int] = None
    fit_config: FitConfig = field(default_factory=FitConfig)

    def __post_init__(self) -> None:
        self.command = Command(self.command)
        if not self.output_path:
            raise InputError("an output path is required")
        if self.command in (Command.FIT, Command.TUNE, Command.SPARSE, Command.MIXED):
            if not self.input_path:
                raise InputError(f"'{self.command.value}' needs --in")
        if self.command in (Command.FIT, Command.TUNE):
            if (self.lambda_ is None) == (self.df_target is None):
                raise InputError("give exactly one of --lambda / --df")
        if self.command is Command.TUNE and self.df_target is None:
            raise InputError("'tune' needs --df")
        if self.k < 0:
            raise InputError("k must be nonnegative")
        if self.reps < 1:
            raise InputError("--reps must be at least 1")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["command"] = self.command.value
        data["fit_config"] = self.fit_config.to_dict()
        return data
