"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Unknown name or malformed configuration."""


class ValidationError(ValueError):
    """Structurally valid input with illegal values."""


class CapabilityError(RuntimeError):
    """An operation was asked of a model that cannot support it."""


class DivergenceError(RuntimeError):
    """An iterative solver failed to reach its tolerance within its cap."""


class ImportanceSupportError(RuntimeError):
    """A proposal assigned zero probability to a sampled action."""


class SearchFailureError(RuntimeError):
    """A finished search produced no usable root statistics."""


class EstimationError(RuntimeError):
    """A statistical fit is not identifiable from the given data."""
