"""Exception types shared across the package."""


class AsepLabError(Exception):
    """Base class for all errors raised by asep_lab."""


class GeometryError(AsepLabError):
    """Contour geometry cannot satisfy the requested constraints."""


class SizeError(AsepLabError):
    """Problem size outside the supported envelope."""


class DomainError(AsepLabError):
    """Argument outside the mathematical domain (pole, branch cut, range)."""


class ConvergenceError(AsepLabError):
    """A quadrature or series failed its convergence/accuracy gate."""


class TruncationError(AsepLabError):
    """Series truncation bound exceeds the requested tolerance."""


class InversionError(AsepLabError):
    """Moment-to-distribution inversion failed (mass or tail out of bounds)."""


class EvaluationError(AsepLabError):
    """A kernel or integrand evaluated to a non-finite value."""

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where
