"""Exception hierarchy shared across the package."""


class CredalcastError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(CredalcastError):
    """Operands live on outcome spaces of different size."""


class InvalidInputError(CredalcastError, ValueError):
    """Input violates a documented precondition."""


class GBRUndefinedError(CredalcastError):
    """Conditioning event has zero lower probability."""


class ConvergenceError(CredalcastError):
    """Iterative solver did not reach the requested tolerance."""

    def __init__(self, message, gap=None):
        super().__init__(message)
        self.gap = gap


class TrainingError(CredalcastError):
    """Training aborted (non-finite loss or exhausted data)."""


class ConfigError(CredalcastError):
    """Run configuration failed schema validation."""
