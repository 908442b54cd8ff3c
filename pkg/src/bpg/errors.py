"""Exception types shared across the package."""


class BpgError(Exception):
    """Base class for all package errors."""


class DomainError(BpgError, ValueError):
    """An argument lies outside the domain of the operation."""


class ConvergenceError(BpgError, RuntimeError):
    """An iterative method failed to reach its tolerance."""


class NotPositiveDefiniteError(BpgError, ArithmeticError):
    """A matrix expected to be symmetric positive-definite is not."""


class DataError(BpgError, ValueError):
    """Input data is unreadable, empty, or fails validation."""


class QuadratureWarning(RuntimeWarning):
    """A quadrature result missed its requested tolerance."""
