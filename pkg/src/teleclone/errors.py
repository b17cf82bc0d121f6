"""Exception types raised across the package."""


class InvalidArgumentError(ValueError):
    """An argument violates a documented precondition."""


class OutOfRangeError(ValueError):
    """A photon number or truncation lies outside the representable range."""


class DegenerateSamplingError(RuntimeError):
    """Importance weights collapsed onto too few samples."""


class ConditioningError(ArithmeticError):
    """A linear system was too ill-conditioned to solve reliably."""
