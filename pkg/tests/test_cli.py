import json

import numpy as np
import pytest

from cli.app import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, CommandLineApp, main
from cli.parser import parse_args
from models.config import Command, FitConfig, RunConfig
from models.errors import NotPositiveDefiniteError
from services.solvers.admm import soft_threshold


def _columns(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def _sidecar(path) -> dict:
    return json.loads(path.with_suffix(".json").read_text(encoding="utf-8"))


# ----------------------------------------------------------------------
# Parsing
# ----------------------------------------------------------------------

def test_parse_fit_flags():
    config, level = parse_args(["fit", "--in", "a.csv", "--out", "b.csv", "--k", "2", "--lambda", "0.5", "--tol", "1e-9", "-q"])
    assert config.command is Command.FIT
    assert (config.k, config.lambda_, config.df_target) == (2, 0.5, None)
    assert config.fit_config.tol == 1e-9
    assert level == 30


def test_bench_single_df_becomes_the_grid():
    config, _ = parse_args(["bench", "doppler", "--df", "50", "--out", "b.csv"])
    assert config.df_grid == [50]
    assert config.scenario == "doppler"
    assert config.methods == ["tf:3", "ss"]


@pytest.mark.parametrize(
    "argv",
    [
        ["frobnicate"],
        ["fit", "--in", "a.csv"],
        ["fit", "--in", "a.csv", "--out", "b.csv"],
        ["fit", "--in", "a.csv", "--out", "b.csv", "--lambda", "1", "--df", "4"],
        ["tune", "--in", "a.csv", "--out", "b.csv", "--lambda", "1"],
        ["bench", "--out", "b.csv"],
        ["simulate", "hills", "--scenario", "doppler", "--out", "s.csv"],
        ["simulate", "--out", "s.csv", "-v", "-q"],
        ["rate", "--out", "r.csv", "--n-grid", "64,x"],
    ],
)
def test_usage_errors_exit_with_one(argv):
    assert main(argv) == EXIT_INPUT


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == EXIT_OK
    assert "simulate" in capsys.readouterr().out


# ----------------------------------------------------------------------
# fit / tune
# ----------------------------------------------------------------------

def test_fit_at_zero_lambda_returns_the_data(xy_file, noisy_signal, tmp_path):
    out = tmp_path / "fit.csv"
    assert main(["fit", "--in", str(xy_file(noisy_signal)), "--out", str(out), "--lambda", "0"]) == EXIT_OK
    np.testing.assert_array_equal(_columns(out)[:, 1], noisy_signal)
    summary = _sidecar(out)
    assert summary["command"] == "fit"
    assert summary["df"] == noisy_signal.size


def test_fit_at_huge_lambda_is_a_polynomial(xy_file, noisy_signal, tmp_path):
    out = tmp_path / "fit.csv"
    assert main(["fit", "--in", str(xy_file(noisy_signal)), "--out", str(out), "--k", "1", "--lambda", "1e9"]) == EXIT_OK
    beta = _columns(out)[:, 1]
    assert np.max(np.abs(np.diff(beta, n=2))) <= 1e-10
    summary = _sidecar(out)
    assert summary["knots"] == [] and summary["df"] == 2
    assert summary["scale"] == "grid_scaled"


def test_tune_hits_the_df_target(xy_file, noisy_signal, tmp_path):
    out = tmp_path / "tuned.csv"
    assert main(["tune", "--in", str(xy_file(noisy_signal)), "--out", str(out), "--df", "6"]) == EXIT_OK
    summary = _sidecar(out)
    assert abs(summary["df"] - 6) <= 1
    assert len(summary["knots"]) == summary["df"] - 2


def test_malformed_input_exits_with_one(write_csv, tmp_path):
    path = write_csv("x,y\n0.5,1\n1,abc\n")
    assert main(["fit", "--in", str(path), "--out", str(tmp_path / "o.csv"), "--lambda", "1"]) == EXIT_INPUT
    assert not (tmp_path / "o.csv").exists()


def test_missing_input_exits_with_one(tmp_path):
    assert main(["fit", "--in", str(tmp_path / "none.csv"), "--out", str(tmp_path / "o.csv"), "--lambda", "1"]) == EXIT_INPUT


def test_solver_failure_exits_with_two(xy_file, noisy_signal, tmp_path):
    config = RunConfig(
        command=Command.FIT,
        input_path=str(xy_file(noisy_signal)),
        output_path=str(tmp_path / "o.csv"),
        k=2,
        lambda_=1e-4,
        fit_config=FitConfig(max_iter=1, polish=False),
    )
    assert CommandLineApp().run(config) == EXIT_NUMERICAL


# ----------------------------------------------------------------------
# simulate / bench / rate
# ----------------------------------------------------------------------

def test_simulate_is_reproducible(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (first, second):
        assert main(["simulate", "doppler", "--n", "1000", "--seed", "7", "--out", str(out)]) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()
    table = _columns(first)
    assert table.shape == (1000, 3)
    np.testing.assert_allclose(table[:, 2], np.sin(4.0 / table[:, 0]) + 1.5)


def test_simulate_unknown_scenario(tmp_path):
    assert main(["simulate", "bumps", "--out", str(tmp_path / "s.csv")]) == EXIT_INPUT


def test_bench_writes_records_and_summary(tmp_path):
    out = tmp_path / "bench.csv"
    argv = ["bench", "hills", "--n", "64", "--reps", "2", "--df", "6", "--methods", "tf:1,ss", "--threads", "1", "--out", str(out)]
    assert main(argv) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "replicate,seed,method,df_target,df,loss,runtime,error"
    assert len(lines) == 5
    summary = _sidecar(out)
    assert summary["methods"] == ["tf:1", "ss"]
    assert summary["restrict_from"] is None
    assert [r["method"] for r in summary["results"]] == ["tf:1", "ss"]
    assert all(r["mean_loss"] > 0 and r["replicates"] == 2 for r in summary["results"])


def test_bench_numerical_failure_exits_with_two(tmp_path):
    class Failing:
        def __init__(self, cfg, threads):
            pass

        def run(self, *args, **kwargs):
            raise NotPositiveDefiniteError(3)

    config = RunConfig(command=Command.BENCH, output_path=str(tmp_path / "b.csv"), df_grid=[5])
    assert CommandLineApp(bench_factory=Failing).run(config) == EXIT_NUMERICAL


def test_rate_writes_slope(tmp_path):
    out = tmp_path / "rate.csv"
    argv = ["rate", "--k", "1", "--n-grid", "20,200", "--reps", "1", "--c-lambda", "0", "--noise-sd", "0", "--threads", "1", "--out", str(out)]
    assert main(argv) == EXIT_OK
    np.testing.assert_array_equal(_columns(out)[:, 0], [20, 200])
    summary = _sidecar(out)
    assert summary["slope"] is None
    assert summary["theoretical_slope"] == pytest.approx(-0.8)


# ----------------------------------------------------------------------
# sparse / mixed
# ----------------------------------------------------------------------

def test_sparse_without_difference_penalty(xy_file, noisy_signal, tmp_path):
    out = tmp_path / "sparse.csv"
    argv = ["sparse", "--in", str(xy_file(noisy_signal)), "--out", str(out), "--lambda1", "0", "--lambda2", "0.3"]
    assert main(argv) == EXIT_OK
    np.testing.assert_allclose(_columns(out)[:, 1], soft_threshold(noisy_signal, 0.3), atol=1e-6)
    assert _sidecar(out)["scale"] == "raw"


def test_mixed_writes_both_orders(xy_file, noisy_signal, tmp_path):
    out = tmp_path / "mixed.csv"
    argv = [
        "mixed", "--in", str(xy_file(noisy_signal)), "--out", str(out),
        "--k1", "0", "--k2", "2", "--lambda1", "0.2", "--lambda2", "0.1",
    ]
    assert main(argv) == EXIT_OK
    summary = _sidecar(out)
    assert (summary["k1"], summary["k2"], summary["n"]) == (0, 2, noisy_signal.size)
    assert _columns(out).shape == (noisy_signal.size, 2)
