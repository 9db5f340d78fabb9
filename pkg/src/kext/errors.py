"""Exception types shared across the package."""

from __future__ import annotations


class KextError(Exception):
    """Base class for all library errors."""


class DomainError(KextError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class NumericError(KextError, ArithmeticError):
    """A numerical procedure failed; ``diagnostics`` carries the details."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TieError(NumericError):
    """Zero spacings in a sample handed to a spacing estimator."""

    def __init__(self, ties: int):
        super().__init__(f"sample contains {ties} tied values (zero spacings)",
                         {"ties": ties})
        self.ties = ties
