"""Exception types shared by every module of the package."""


class IGBError(Exception):
    """Base class for all errors raised by the package."""


class ConfigError(IGBError, ValueError):
    """An invalid or unsupported configuration.

    ``field`` names the offending setting when one can be singled out.
    """

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class DomainError(IGBError, ValueError):
    """An argument outside the mathematical domain of a function."""


class NumericalError(IGBError, ArithmeticError):
    """A computation produced a non-finite value or failed to converge."""


class EnsembleError(IGBError, RuntimeError):
    """An ensemble run aborted; ``completed`` counts replicas that finished."""

    def __init__(self, message: str, completed: int, requested: int):
        super().__init__(f"{message} (completed {completed} of {requested} replicas)")
        self.completed = completed
        self.requested = requested
