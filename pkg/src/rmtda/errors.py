"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class RdaError(Exception):
    """Base class for all errors raised by :mod:`rmtda`."""


class ModelError(RdaError):
    """Invalid ground-truth model (non-PSD covariance, bad priors, shape mismatch)."""


class DomainError(RdaError, ValueError):
    """An argument lies outside its mathematical domain (e.g. ``gamma <= 0``)."""


class InsufficientDataError(RdaError):
    """Not enough samples in a class to form the requested statistic."""


class DimensionError(RdaError, ValueError):
    """Vector or matrix dimensions do not agree."""


class DegenerateVarianceError(RdaError):
    """A Gaussian approximation has zero or negative variance."""


class SolverError(RdaError):
    """A fixed-point solver failed to converge or hit an invalid denominator."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class EstimatorBreakdownError(RdaError):
    """A consistent estimator hit a non-positive denominator.

    ``value`` holds the offending quantity so callers can log it.
    """

    def __init__(self, message: str, value: float | None = None):
        super().__init__(message)
        self.value = value


class TuningError(RdaError):
    """Every candidate regularization value failed."""


class DatasetError(RdaError):
    """Malformed or empty input data file."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(RdaError):
    """Invalid experiment configuration."""
