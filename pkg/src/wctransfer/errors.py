"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "WctError",
    "InvalidArgumentError",
    "NotFittedError",
    "DegenerateInputError",
    "NumericalError",
    "WeightFormatError",
    "ConfigurationError",
]


class WctError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgumentError(WctError, ValueError):
    """An argument violates a documented precondition (shape, range, coverage...)."""


class NotFittedError(InvalidArgumentError):
    """An estimator method that needs a fitted state was called before fit()."""


class DegenerateInputError(WctError, ValueError):
    """Input statistics carry no usable signal (e.g. rank-0 covariance)."""


class NumericalError(WctError, ArithmeticError):
    """An iterative routine failed to converge.

    ``residual`` holds the offending residual so callers can report how far
    from convergence the routine ended up.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class WeightFormatError(WctError, ValueError):
    """A weight container file is malformed. ``offset`` is the failing byte."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ConfigurationError(WctError, RuntimeError):
    """The loaded weights/network specs cannot support the requested operation."""
