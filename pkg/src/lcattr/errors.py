"""Exception types shared across the package.

Everything raised on purpose derives from LcattrError so callers can catch
one base class at the boundary (the CLI maps subtrees to exit codes).
"""

from __future__ import annotations


class LcattrError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(LcattrError):
    """Input vector length does not match the model or dataset width."""


class ConstantColumn(LcattrError):
    """A feature column has (numerically) zero spread and cannot be scaled."""

    def __init__(self, column: str, std: float):
        self.column = column
        self.std = std
        super().__init__(
            f"feature column {column!r} is constant (std={std:.3g}); "
            "drop it or pass a constant_floor"
        )


class ValidationError(LcattrError):
    """Dataset failed validation; carries the full issue report."""

    def __init__(self, report):
        self.report = report
        lines = "; ".join(i.message for i in report.issues[:5])
        more = "" if len(report.issues) <= 5 else f" (+{len(report.issues) - 5} more)"
        super().__init__(f"dataset validation failed: {lines}{more}")


class ParseError(LcattrError):
    """A CSV cell or structural element could not be parsed."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        super().__init__(message)


class MissingColumn(LcattrError):
    """A named column is absent from the CSV header."""


class ExternalModelFailure(LcattrError):
    """The external model process failed to answer a query."""


class SingularSystem(LcattrError):
    """A linear system was singular and no ridge term was allowed."""


class NoConvergence(LcattrError):
    """An iterative fit exhausted its iteration budget."""

    def __init__(self, message: str, iterations: int):
        self.iterations = iterations
        super().__init__(message)


class ExactTooLarge(LcattrError):
    """Exact subset enumeration was requested beyond the supported width."""


class EmptyBackground(LcattrError):
    """A background distribution has nothing to draw from."""


class DegenerateWeightsWarning(UserWarning):
    """All kernel weights underflowed; an unweighted fallback was used."""
