"""Shared fixtures: seeded generators, small datasets and CSV helpers."""

from __future__ import annotations

import pathlib

import numpy as np
import pytest

from models.config import FitConfig, ScaleConvention


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20140101)


@pytest.fixture
def grid():
    def make(n: int) -> np.ndarray:
        return np.arange(1, n + 1) / n

    return make


@pytest.fixture
def noisy_signal(rng):
    """Piecewise linear truth plus noise, n = 60."""
    n = 60
    x = np.arange(1, n + 1) / n
    f0 = np.where(x < 0.5, 2 * x, 2 - 2 * x)
    return f0 + 0.1 * rng.standard_normal(n)


@pytest.fixture
def raw_cfg() -> FitConfig:
    return FitConfig(scale=ScaleConvention.RAW)


@pytest.fixture
def write_csv(tmp_path: pathlib.Path):
    """Write text to a CSV file under tmp_path and return its path."""

    def write(text: str, name: str = "data.csv") -> pathlib.Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return write


@pytest.fixture
def xy_file(write_csv):
    """Write an `x,y` file on the grid i/n for the given values."""

    def write(y: np.ndarray, name: str = "data.csv") -> pathlib.Path:
        n = len(y)
        rows = "".join(f"{(i + 1) / n!r},{float(v)!r}\n" for i, v in enumerate(y))
        return write_csv("x,y\n" + rows, name)

    return write
