"""
Error types raised by the trend filtering library.

Responsibility: give every failure mode one class so callers (the CLI in
particular) can map them to exit codes without parsing messages.
"""

from __future__ import annotations

from typing import Any, Optional, Sequence


class TrendFilterError(Exception):
    """Base class for all library errors."""


class InputError(TrendFilterError, ValueError):
    """Invalid sizes, orders, tuning parameters or evaluation points."""


class DataFormatError(InputError):
    """Malformed input file. `line` is 1-based."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None) -> None:
        self.line = line
        self.path = path
        where = ""
        if path:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


class NotPositiveDefiniteError(TrendFilterError, ArithmeticError):
    """Banded Cholesky hit a non-positive pivot (0-based index)."""

    def __init__(self, pivot: int) -> None:
        self.pivot = pivot
        super().__init__(f"matrix is not positive definite: non-positive pivot at index {pivot}")


class ConvergenceError(TrendFilterError, RuntimeError):
    """An iterative solver stopped at its iteration cap."""

    def __init__(
        self,
        message: str,
        diagnostics: Any = None,
        history: Optional[Sequence[tuple[float, float]]] = None,
    ) -> None:
        self.diagnostics = diagnostics
        self.history = list(history) if history is not None else []
        super().__init__(message)
