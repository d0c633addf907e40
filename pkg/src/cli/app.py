"""
CommandLineApp – wires services to the command line.

Responsibility: run one command described by a RunConfig, write its
files through StorageService and map failures to exit codes
(0 success, 1 usage or input error, 2 numerical failure). All numbers
come from direct library calls; this module adds no numerics.

Output files
------------
fit / tune      CSV `x,beta`; JSON sidecar (same stem, .json) with
                schema_version, command, n, lambda, scale, k, df, knots
                (1-based rows of D^(k+1)), duality_gap, relative_gap,
                iterations, wall_time, converged, warning.
simulate        CSV `x,y,f0`.
bench           CSV, one row per replicate x method x df target:
                replicate, seed, method, df_target, df, loss, runtime,
                error (empty on success). JSON sidecar: schema_version,
                command, scenario, n, replicates, seed, noise_sd,
                restrict_from, methods, df_grid and `results`, a list of
                {method, df_target, mean_loss, stderr, replicates,
                failures, mean_runtime}.
rate            CSV `n,mean_loss`; JSON sidecar with schema_version,
                command, k, n_grid, mean_losses, c_lambda, slope,
                scenario (the truth used for this k), theoretical_slope.
sparse / mixed  CSV `x,beta`; JSON sidecar with the orders, both
                lambdas and scale "raw".
"""

from __future__ import annotations

import logging
import sys
from typing import Callable, Optional, Sequence

from models.config import SCHEMA_VERSION, Command, RunConfig, ScaleConvention
from models.dataset import MethodSpec, bench_summary
from models.errors import ConvergenceError, InputError, NotPositiveDefiniteError
from services.estimators import fit_trend_filter, tune_to_df
from services.simbench import (
    DEFAULT_SPLIT,
    BenchmarkService,
    default_restrict_from,
    generate,
    parse_scenario,
    rate_study,
)
from services.solvers.admm import solve_mixed_tf, solve_sparse_tf
from services.storage_service import StorageService
from cli.parser import parse_args

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s [%(name)s] %(message)s"

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


def configure_logging(level: int) -> None:
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


class CommandLineApp:
    """Runs one command; services are injected for testing."""

    def __init__(
        self,
        storage: Optional[StorageService] = None,
        bench_factory: Callable[..., BenchmarkService] = BenchmarkService,
    ) -> None:
        self._storage = storage or StorageService()
        self._bench_factory = bench_factory
        self._handlers: dict[Command, Callable[[RunConfig], None]] = {
            Command.FIT: self._fit,
            Command.TUNE: self._fit,
            Command.SIMULATE: self._simulate,
            Command.BENCH: self._bench,
            Command.RATE: self._rate,
            Command.SPARSE: self._sparse,
            Command.MIXED: self._mixed,
        }

    # ------------------------------------------------------------------
    # Public API
    # ------------------------------------------------------------------

    def run(self, config: RunConfig) -> int:
        try:
            self._handlers[config.command](config)
        except InputError as exc:
            logger.error("%s", exc)
            return EXIT_INPUT
        except (ConvergenceError, NotPositiveDefiniteError) as exc:
            logger.error("numerical failure: %s", exc)
            return EXIT_NUMERICAL
        except OSError as exc:
            logger.error("I/O error: %s", exc)
            return EXIT_INPUT
        logger.info("%s: wrote %s", config.command.value, config.output_path)
        return EXIT_OK

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def _fit(self, config: RunConfig) -> None:
        data = self._storage.read_xy(config.input_path)
        if config.df_target is not None:
            fit = tune_to_df(data.y, config.k, config.df_target, config.fit_config)
        else:
            fit = fit_trend_filter(data.y, config.k, config.lambda_, config.fit_config)
        self._storage.write_columns(config.output_path, {"x": data.x, "beta": fit.beta})
        summary = {"command": config.command.value, "n": fit.n, **fit.summary()}
        self._storage.write_json(self._storage.sidecar_path(config.output_path), summary)

    def _simulate(self, config: RunConfig) -> None:
        data = generate(config.scenario, config.n, config.noise_sd, config.seed)
        self._storage.write_columns(config.output_path, {"x": data.x, "y": data.y, "f0": data.f0})

    def _bench(self, config: RunConfig) -> None:
        scenario = parse_scenario(config.scenario)
        specs = [MethodSpec.parse(m) for m in config.methods]
        restrict_from = config.restrict_from
        if restrict_from is None:
            restrict_from = default_restrict_from(scenario)
        bench = self._bench_factory(config.fit_config, config.threads)
        results, records = bench.run(
            scenario,
            specs,
            config.df_grid,
            config.reps,
            seed=config.seed,
            n=config.n,
            noise_sd=config.noise_sd,
            restrict_from=restrict_from,
            split=DEFAULT_SPLIT if config.split is None else config.split,
            df_left=config.df_left,
            df_right=config.df_right,
        )
        self._storage.write_rows(config.output_path, [rec.to_row() for rec in records])
        summary = bench_summary(
            results,
            command=config.command.value,
            scenario=scenario.value,
            n=config.n,
            replicates=config.reps,
            seed=config.seed,
            noise_sd=config.noise_sd,
            restrict_from=restrict_from,
            methods=[s.name for s in specs],
            df_grid=list(config.df_grid),
        )
        self._storage.write_json(self._storage.sidecar_path(config.output_path), summary)

    def _rate(self, config: RunConfig) -> None:
        result = rate_study(
            config.k,
            config.n_grid,
            config.reps,
            c_lambda=config.c_lambda,
            noise_sd=config.noise_sd,
            seed=config.seed,
            cfg=config.fit_config,
            threads=config.threads,
        )
        self._storage.write_columns(
            config.output_path, {"n": result.n_grid, "mean_loss": result.mean_losses}
        )
        summary = {"command": config.command.value, **result.to_dict()}
        self._storage.write_json(self._storage.sidecar_path(config.output_path), summary)

    def _sparse(self, config: RunConfig) -> None:
        if config.lambda1 is None or config.lambda2 is None:
            raise InputError("'sparse' needs --lambda1 and --lambda2")
        data = self._storage.read_xy(config.input_path)
        beta = solve_sparse_tf(data.y, config.k, config.lambda1, config.lambda2, config.fit_config)
        self._write_variant(config, data.x, beta, {"k": config.k})

    def _mixed(self, config: RunConfig) -> None:
        if None in (config.k1, config.k2, config.lambda1, config.lambda2):
            raise InputError("'mixed' needs --k1, --k2, --lambda1 and --lambda2")
        data = self._storage.read_xy(config.input_path)
        beta = solve_mixed_tf(
            data.y, config.k1, config.k2, config.lambda1, config.lambda2, config.fit_config
        )
        self._write_variant(config, data.x, beta, {"k1": config.k1, "k2": config.k2})

    def _write_variant(self, config: RunConfig, x, beta, orders: dict) -> None:
        self._storage.write_columns(config.output_path, {"x": x, "beta": beta})
        summary = {
            "schema_version": SCHEMA_VERSION,
            "command": config.command.value,
            "n": int(beta.size),
            **orders,
            "lambda1": config.lambda1,
            "lambda2": config.lambda2,
            "scale": ScaleConvention.RAW.value,
        }
        self._storage.write_json(self._storage.sidecar_path(config.output_path), summary)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse argv, configure logging and run; returns the exit status."""
    try:
        config, level = parse_args(argv)
    except InputError as exc:
        configure_logging(logging.INFO)
        logger.error("%s", exc)
        return EXIT_INPUT
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    configure_logging(level)
    return CommandLineApp().run(config)
