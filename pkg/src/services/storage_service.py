"""
StorageService – CSV and JSON file persistence.

Responsibility: read observation files (header `x,y`, evenly spaced x),
write result tables with 17 significant digits and JSON sidecars.
Every write is atomic (write to a temporary file, then rename).
Knows nothing about the command line or the numerics.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import pathlib
import shutil
from typing import Any, Mapping, Sequence

import numpy as np

from models.dataset import Dataset
from models.errors import DataFormatError

logger = logging.getLogger(__name__)

GRID_RTOL = 1e-6


def format_float(value: float) -> str:
    """Round-trip-exact text for a 64-bit float."""
    return format(float(value), ".17g")


def _cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if not math.isfinite(value) else float(value)
    return value


class StorageService:
    """Loads observation CSVs and saves fits, benchmark tables and summaries."""

    def __init__(self, grid_rtol: float = GRID_RTOL) -> None:
        self._grid_rtol = grid_rtol

    # ------------------------------------------------------------------
    # Reading
    # ------------------------------------------------------------------

    def read_xy(self, path: str | pathlib.Path) -> Dataset:
        """Parse a `x,y` CSV; raises DataFormatError with the offending line."""
        path = pathlib.Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise DataFormatError(f"cannot read file: {exc.strerror or exc}", path=str(path)) from exc

        reader = csv.reader(io.StringIO(text))
        xs: list[float] = []
        ys: list[float] = []
        lines: list[int] = []
        header_seen = False
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if not header_seen:
                if [cell.strip().lower() for cell in row] != ["x", "y"]:
                    raise DataFormatError("header must be 'x,y'", line=line, path=str(path))
                header_seen = True
                continue
            if len(row) != 2:
                raise DataFormatError(f"expected 2 fields, found {len(row)}", line=line, path=str(path))
            try:
                x, y = float(row[0]), float(row[1])
            except ValueError:
                raise DataFormatError(f"not a number: {','.join(row)!r}", line=line, path=str(path)) from None
            if not (math.isfinite(x) and math.isfinite(y)):
                raise DataFormatError("non-finite value", line=line, path=str(path))
            xs.append(x)
            ys.append(y)
            lines.append(line)

        if not header_seen:
            raise DataFormatError("file is empty; expected header 'x,y'", line=1, path=str(path))
        if len(xs) < 2:
            raise DataFormatError("need at least two observations", path=str(path))
        x_arr = np.array(xs)
        self._check_grid(x_arr, lines, path)
        return Dataset(x=x_arr, y=np.array(ys))

    def _check_grid(self, x: np.ndarray, lines: list[int], path: pathlib.Path) -> None:
        """Rejects x that is not an even, increasing grid; `lines` are the source lines of x."""
        steps = np.diff(x)
        if np.any(steps <= 0):
            bad = int(np.flatnonzero(steps <= 0)[0])
            raise DataFormatError("x must be strictly increasing", line=lines[bad + 1], path=str(path))
        h = float(steps[0])
        uneven = np.abs(steps - h) > self._grid_rtol * h
        if np.any(uneven):
            bad = int(np.flatnonzero(uneven)[0])
            raise DataFormatError(
                f"x is not evenly spaced (relative tolerance {self._grid_rtol:g})",
                line=lines[bad + 1],
                path=str(path),
            )

    def read_json(self, path: str | pathlib.Path) -> dict:
        return json.loads(pathlib.Path(path).read_text(encoding="utf-8"))

    # ------------------------------------------------------------------
    # Writing
    # ------------------------------------------------------------------

    def write_columns(self, path: str | pathlib.Path, columns: Mapping[str, Sequence[float]]) -> None:
        """CSV with one column per entry, floats at 17 significant digits."""
        names = list(columns)
        arrays = [np.asarray(columns[name]) for name in names]
        if len({a.size for a in arrays}) > 1:
            raise ValueError("columns must have equal length")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(names)
        for values in zip(*arrays):
            writer.writerow([_cell(v) for v in values])
        self._atomic_write(pathlib.Path(path), buf.getvalue())

    def write_rows(self, path: str | pathlib.Path, rows: Sequence[Mapping[str, Any]]) -> None:
        """CSV of records sharing the keys of the first one."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if rows:
            names = list(rows[0])
            writer.writerow(names)
            for row in rows:
                writer.writerow([_cell(row[name]) for name in names])
        self._atomic_write(pathlib.Path(path), buf.getvalue())

    def write_json(self, path: str | pathlib.Path, data: Mapping[str, Any]) -> None:
        """Pretty-printed JSON; NaN and infinities become null."""
        text = json.dumps(_jsonable(data), indent=2, ensure_ascii=False) + "\n"
        self._atomic_write(pathlib.Path(path), text)

    @staticmethod
    def sidecar_path(path: str | pathlib.Path) -> pathlib.Path:
        """`out.csv` -> `out.json`."""
        return pathlib.Path(path).with_suffix(".json")

    # ------------------------------------------------------------------
    # Internals
    # ------------------------------------------------------------------

    @staticmethod
    def _atomic_write(path: pathlib.Path, text: str) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        try:
            tmp.write_text(text, encoding="utf-8", newline="")
            shutil.move(str(tmp), str(path))
        except OSError:
            logger.error("writing %s failed", path)
            tmp.unlink(missing_ok=True)
            raise
