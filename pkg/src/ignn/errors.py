"""Exception types shared across the package."""


class IGNNError(Exception):
    """Base class for all package errors."""


class ParameterError(IGNNError, ValueError):
    """An argument violates an operation's preconditions."""


class DataError(IGNNError, ValueError):
    """Input data is malformed or inconsistent."""


class UsageError(IGNNError, ValueError):
    """An operation was applied to operands it does not support."""


class UndefinedMetricError(IGNNError, ValueError):
    """A metric has no defined value for the given input (e.g. all ties)."""


class TrainingError(IGNNError, RuntimeError):
    """Training diverged or could not proceed."""

    def __init__(self, message: str, epoch: int | None = None):
        super().__init__(message)
        self.epoch = epoch


class ConfigError(IGNNError, ValueError):
    """A configuration file or override is invalid."""
