"""Exception types. Everything raised for bad parameters is a ``ValueError``."""


class SharpError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(SharpError, ValueError):
    """Invalid parameter or configuration value."""


class InvalidDimensionError(ConfigError):
    pass


class InvalidBaseError(ConfigError):
    pass


class InvalidScheduleError(ConfigError):
    pass


class InvalidPromotionError(ConfigError):
    pass


class DomainError(ConfigError):
    """Argument outside the mathematical domain of an operation."""


class DataError(SharpError):
    """Input data could not be read or processed."""


class NonFiniteError(DataError):
    """A denoiser produced NaN or inf values."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"denoiser returned non-finite values at step {step}")
