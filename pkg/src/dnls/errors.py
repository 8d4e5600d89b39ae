"""Exception hierarchy."""

from __future__ import annotations


class DNLSError(Exception):
    """Base class for all package errors."""


class DimensionError(DNLSError, ValueError):
    """State length or boundary tag does not match the model parameters."""


class InvalidScaleError(DNLSError, ValueError):
    pass


class NormalizationError(DNLSError, ValueError):
    """The zero state cannot be normalized."""


class InvalidPatternError(DNLSError, ValueError):
    """Occupancy pattern violates the (n, m, l) constraints."""


class UndefinedDiagnosticError(DNLSError, ArithmeticError):
    """Sum-based energy estimate has a vanishing denominator (sign-balanced state)."""


class NoDecayingTailError(DNLSError, ValueError):
    pass


class OutOfDomainError(DNLSError, ValueError):
    pass


class NearDegeneracyError(DNLSError, ArithmeticError):
    """The linearized system is numerically singular.

    Raised when the smallest elimination pivot falls below the configured
    fraction of the matrix norm, which happens when another solution branch
    crosses the one being followed.
    """

    def __init__(self, min_pivot: float, norm: float, pattern=None):
        self.min_pivot = min_pivot
        self.norm = norm
        self.pattern = pattern
        where = f" for seed pattern (n, m, l) = {pattern}" if pattern is not None else ""
        super().__init__(
            f"near-singular linear system{where}: smallest pivot {min_pivot:.3e} "
            f"(matrix inf-norm {norm:.3e})"
        )


class ConfigurationError(DNLSError, ValueError):
    """Invalid scenario or CLI configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
