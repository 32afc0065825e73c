"""Exception hierarchy shared by every module of the package."""

import numpy as np


class GaussRateError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(GaussRateError, np.linalg.LinAlgError):
    """A matrix expected to be positive definite is (numerically) singular."""


class DegenerateCovariance(NotPositiveDefinite):
    """The covariance matrix of the process is singular at a domain point."""

    def __init__(self, point, message=None):
        self.point = tuple(float(x) for x in np.atleast_1d(point))
        super().__init__(message or f"covariance is not positive definite at t={self.point}")


class NoConvergence(GaussRateError):
    """An iterative routine hit its iteration cap."""


class DimensionTooLarge(GaussRateError):
    """Problem dimension exceeds what an exhaustive routine can handle."""


class DimensionCap(GaussRateError):
    """Joint covariance would exceed the configured size cap."""


class ZeroWeight(GaussRateError, ValueError):
    """A weight vector that must be nonzero is identically zero."""


class OutsideTable(GaussRateError, KeyError):
    """A tabulated quantity was requested at a point that is not tabulated."""


class InvalidCorrelation(GaussRateError, ValueError):
    """Correlation coefficient outside [-1, 1]."""


class BelowThreshold(GaussRateError, ValueError):
    """Level u does not exceed the drift threshold u0."""

    def __init__(self, u, u0):
        self.u = float(u)
        self.u0 = float(u0)
        super().__init__(f"u={self.u:g} must exceed the threshold u0={self.u0:g}")


class ModelError(GaussRateError, ValueError):
    """Invalid model, drift or grid specification."""


class ConfigError(GaussRateError, ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
