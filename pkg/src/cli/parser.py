"""
Parser – command-line flags to RunConfig.

Responsibility: declare the sub-commands and their flags, turn the parsed
namespace into a validated RunConfig plus a logging level. Usage errors
raise InputError instead of exiting so the app owns the exit codes.
"""

from __future__ import annotations

import argparse
import logging
from typing import Callable, NoReturn, Optional, Sequence, TypeVar

from models.config import Command, FitConfig, RunConfig
from models.errors import InputError

T = TypeVar("T")

DEFAULT_N_GRID = "64,128,256,512,1024"


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise InputError(f"{self.prog}: {message}")


def _list_of(convert: Callable[[str], T]) -> Callable[[str], list[T]]:
    def parse(text: str) -> list[T]:
        try:
            return [convert(part) for part in text.split(",") if part.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None

    return parse


# ----------------------------------------------------------------------
# Flag groups
# ----------------------------------------------------------------------

def _logging_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    group = flags.add_mutually_exclusive_group()
    group.add_argument("--verbose", "-v", action="store_true", help="log at DEBUG")
    group.add_argument("--quiet", "-q", action="store_true", help="log warnings and errors only")
    return flags


def _solver_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("--tol", type=float, help="relative duality gap tolerance")
    flags.add_argument("--max-iter", type=int, help="interior point iteration cap")
    flags.add_argument("--knot-tol", type=float, help="relative knot detection threshold")
    return flags


def _simulation_flags() -> argparse.ArgumentParser:
    flags = argparse.ArgumentParser(add_help=False)
    flags.add_argument("scenario_pos", nargs="?", metavar="SCENARIO", help="hills, doppler, smooth, blocks or kinks")
    flags.add_argument("--scenario", help="hills, doppler, smooth, blocks or kinks (default hills)")
    flags.add_argument("--n", type=int, default=128, help="sample size (default 128)")
    flags.add_argument("--noise-sd", type=float, help="noise standard deviation (scenario default)")
    flags.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    return flags


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="trendfilter",
        description="Trend filtering: fits, df tuning, simulations and benchmarks.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    log_flags, solver_flags, sim_flags = _logging_flags(), _solver_flags(), _simulation_flags()

    for name, help_text in (
        (Command.FIT, "fit at a fixed lambda or a df target"),
        (Command.TUNE, "fit tuned to a df target"),
    ):
        cmd = sub.add_parser(name.value, parents=[log_flags, solver_flags], help=help_text)
        cmd.add_argument("--in", dest="input_path", required=True, help="CSV with header x,y")
        cmd.add_argument("--out", dest="output_path", required=True, help="CSV x,beta; JSON sidecar beside it")
        cmd.add_argument("--k", type=int, default=1, help="polynomial order (default 1)")
        cmd.add_argument("--lambda", dest="lambda_", type=float, help="tuning parameter")
        cmd.add_argument("--df", dest="df_target", type=int, help="target degrees of freedom")

    cmd = sub.add_parser(Command.SIMULATE.value, parents=[log_flags, sim_flags], help="write x,y,f0 for a scenario")
    cmd.add_argument("--out", dest="output_path", required=True)

    cmd = sub.add_parser(
        Command.BENCH.value, parents=[log_flags, solver_flags, sim_flags], help="compare methods at matched df"
    )
    cmd.add_argument("--out", dest="output_path", required=True, help="per-replicate CSV; JSON summary beside it")
    cmd.add_argument("--methods", type=_list_of(str), default=["tf:3", "ss"], help="e.g. tf:3,ss,las:3,split")
    cmd.add_argument("--df", dest="df_target", type=int, help="single df target")
    cmd.add_argument("--df-grid", type=_list_of(int), default=[], help="comma-separated df targets")
    cmd.add_argument("--reps", type=int, default=10, help="replicates (default 10)")
    cmd.add_argument("--threads", type=int, help="worker threads (default: cores)")
    cmd.add_argument("--restrict-from", type=float, help="score x >= this only (doppler default 0.175)")
    cmd.add_argument("--split", type=float, help="split point of the split smoothing spline (default 0.8)")
    cmd.add_argument("--df-left", type=int, help="split spline df left of the split")
    cmd.add_argument("--df-right", type=int, help="split spline df right of the split")

    cmd = sub.add_parser(Command.RATE.value, parents=[log_flags, solver_flags], help="empirical convergence rate")
    cmd.add_argument("--out", dest="output_path", required=True, help="CSV n,mean_loss; JSON with the slope")
    cmd.add_argument("--k", type=int, default=1)
    cmd.add_argument("--n-grid", type=_list_of(int), default=_list_of(int)(DEFAULT_N_GRID))
    cmd.add_argument("--reps", type=int, default=20, help="replicates per n (default 20)")
    cmd.add_argument("--c-lambda", type=float, help="rate constant (calibrated when omitted)")
    cmd.add_argument("--noise-sd", type=float)
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--threads", type=int)

    cmd = sub.add_parser(Command.SPARSE.value, parents=[log_flags, solver_flags], help="sparse trend filtering")
    cmd.add_argument("--in", dest="input_path", required=True)
    cmd.add_argument("--out", dest="output_path", required=True)
    cmd.add_argument("--k", type=int, default=1)
    cmd.add_argument("--lambda1", type=float, required=True, help="difference penalty weight")
    cmd.add_argument("--lambda2", type=float, required=True, help="sparsity penalty weight")

    cmd = sub.add_parser(Command.MIXED.value, parents=[log_flags, solver_flags], help="mixed trend filtering")
    cmd.add_argument("--in", dest="input_path", required=True)
    cmd.add_argument("--out", dest="output_path", required=True)
    cmd.add_argument("--k1", type=int, required=True)
    cmd.add_argument("--k2", type=int, required=True)
    cmd.add_argument("--lambda1", type=float, required=True)
    cmd.add_argument("--lambda2", type=float, required=True)
    return parser


# ----------------------------------------------------------------------
# Namespace -> RunConfig
# ----------------------------------------------------------------------

def _log_level(args: argparse.Namespace) -> int:
    if getattr(args, "verbose", False):
        return logging.DEBUG
    if getattr(args, "quiet", False):
        return logging.WARNING
    return logging.INFO


def _scenario(args: argparse.Namespace) -> str:
    positional, flag = getattr(args, "scenario_pos", None), getattr(args, "scenario", None)
    if positional and flag and positional != flag:
        raise InputError(f"scenario given twice: {positional!r} and {flag!r}")
    return positional or flag or "hills"


def to_run_config(args: argparse.Namespace) -> RunConfig:
    fit_config = FitConfig().with_updates(
        tol=getattr(args, "tol", None),
        max_iter=getattr(args, "max_iter", None),
        knot_tol=getattr(args, "knot_tol", None),
    )
    command = Command(args.command)
    df_grid = list(getattr(args, "df_grid", []) or [])
    df_target = getattr(args, "df_target", None)
    if command is Command.BENCH and not df_grid:
        if df_target is None:
            raise InputError("'bench' needs --df or --df-grid")
        df_grid = [df_target]

    k = getattr(args, "k", None)
    return RunConfig(
        command=command,
        output_path=args.output_path,
        input_path=getattr(args, "input_path", None),
        k=1 if k is None else k,
        lambda_=getattr(args, "lambda_", None),
        df_target=df_target,
        scenario=_scenario(args),
        n=getattr(args, "n", 128),
        noise_sd=getattr(args, "noise_sd", None),
        reps=getattr(args, "reps", 1),
        seed=getattr(args, "seed", 0),
        threads=getattr(args, "threads", None),
        restrict_from=getattr(args, "restrict_from", None),
        methods=list(getattr(args, "methods", ["tf:3", "ss"])),
        df_grid=df_grid,
        n_grid=list(getattr(args, "n_grid", _list_of(int)(DEFAULT_N_GRID))),
        c_lambda=getattr(args, "c_lambda", None),
        lambda1=getattr(args, "lambda1", None),
        lambda2=getattr(args, "lambda2", None),
        k1=getattr(args, "k1", None),
        k2=getattr(args, "k2", None),
        split=getattr(args, "split", None),
        df_left=getattr(args, "df_left", None),
        df_right=getattr(args, "df_right", None),
        fit_config=fit_config,
    )


def parse_args(argv: Optional[Sequence[str]] = None) -> tuple[RunConfig, int]:
    """Parse argv into (RunConfig, logging level); raises InputError on bad usage."""
    args = build_parser().parse_args(argv)
    return to_run_config(args), _log_level(args)
