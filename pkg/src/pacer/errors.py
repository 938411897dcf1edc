"""Exception types shared across the package."""


class PacerError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PacerError, ValueError):
    """Invalid dimensions, unknown keys or unsupported option combinations."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class UsageError(PacerError, RuntimeError):
    """An API was called in a state where it cannot do anything meaningful."""


class NotReadyError(PacerError, RuntimeError):
    """The replay buffer does not hold enough transitions yet."""


class TrainingError(PacerError, RuntimeError):
    """A loss or gradient became non-finite."""


class CheckpointError(PacerError, RuntimeError):
    """A checkpoint is missing, corrupt, or incompatible with the environment."""


class DataError(PacerError, ValueError):
    """An input data file is empty or does not follow the expected schema."""
