"""Exception types raised across the package."""


class LnTailError(Exception):
    """Base class for every error raised by ``lntail``."""


class DimensionMismatch(LnTailError, ValueError):
    pass


class NotSymmetric(LnTailError, ValueError):
    pass


class NotPositiveDefinite(LnTailError, ValueError):
    """Raised when a Cholesky pivot is not strictly positive.

    ``pivot`` holds the (0-based) row/column of the failing pivot when known.
    """

    def __init__(self, message, pivot=None):
        super().__init__(message)
        self.pivot = pivot


class DomainError(LnTailError, ValueError):
    pass


class AssumptionViolated(LnTailError, ValueError):
    """The covariance matrix has no strictly dominant component."""


class DegenerateVariance(LnTailError, ArithmeticError):
    pass


class DegenerateValue(LnTailError, ArithmeticError):
    pass


class DimensionTooLarge(LnTailError, ValueError):
    pass


class ConfigError(LnTailError, ValueError):
    pass
