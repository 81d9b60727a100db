"""Exception types shared across maxmod modules."""


class MaxmodError(Exception):
    """Base class for all maxmod errors."""


class ConfigurationError(MaxmodError):
    """A request that cannot be honored as configured (e.g. unbounded modulus without a cap)."""


class QuadratureError(MaxmodError):
    """Adaptive quadrature failed to reach the requested tolerance.

    Carries the best value and error estimate obtained so far.
    """

    def __init__(self, message, value, err_estimate):
        super().__init__(message)
        self.value = value
        self.err_estimate = err_estimate


class ResolutionError(MaxmodError):
    """A grid is too coarse to resolve the smallest feature of the requested construction."""


class ConsistencyError(MaxmodError):
    """An internal cross-check between two independent evaluations failed."""
