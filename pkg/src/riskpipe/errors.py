"""Exception types shared across the engine."""

from __future__ import annotations


class RiskpipeError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(RiskpipeError, ValueError):
    """A scalar argument is out of range or otherwise unusable."""


class ShapeError(RiskpipeError, ValueError):
    """Array dimensions disagree with what the operation requires."""


class DecompositionError(RiskpipeError, ValueError):
    """A correlation matrix could not be factorized.

    ``pivot`` is the zero-based index of the first pivot that failed.
    """

    def __init__(self, message: str, pivot: int):
        super().__init__(message)
        self.pivot = pivot


class InsufficientDataError(RiskpipeError, ValueError):
    """Not enough samples (or history) to run the requested computation."""


class DegenerateModelError(RiskpipeError, ValueError):
    """The model output carries no variance, so indices are undefined."""


class NotFoundError(RiskpipeError, KeyError):
    """A referenced asset, session, node or ledger row does not exist."""

    def __str__(self) -> str:  # KeyError quotes its message; keep it readable
        return self.args[0] if self.args else ""


class ConflictError(RiskpipeError, ValueError):
    """An event arrived with a sequence number the session cannot accept."""


class EmptyPortfolioError(RiskpipeError, ValueError):
    """The operation needs at least one asset in the portfolio."""


class EmptyLedgerError(RiskpipeError, ValueError):
    """The timing ledger holds no event rows yet."""


class ParseError(RiskpipeError, ValueError):
    """Malformed input file. ``line`` is the 1-based offending line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line


class OrderingError(RiskpipeError, ValueError):
    """Rows that must be monotone (e.g. price timestamps) are not."""


class NumericError(RiskpipeError, ArithmeticError):
    """A numeric routine left its valid regime (overflow, failed bracket)."""


class CapacityError(RiskpipeError, ValueError):
    """A configured size budget would be exceeded."""
