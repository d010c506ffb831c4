"""Exception types shared across the package."""

from __future__ import annotations


class EmcalError(Exception):
    """Base class for data and processing failures."""


class DataFormatError(EmcalError):
    """An input file could not be read or has an unsupported layout."""


class DegenerateDataError(EmcalError):
    """A training dataset carries no usable signal (e.g. all inputs equal)."""


class FactorizationError(EmcalError):
    """Kernel matrix could not be factorized even after jitter escalation."""


class FitConvergenceError(EmcalError):
    """Nonlinear least squares did not converge; carries the last iterate."""

    def __init__(self, message: str, a: float, b: float, residual: float):
        super().__init__(message)
        self.a = a
        self.b = b
        self.residual = residual
