"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid parameter or parameter combination."""


class UnsupportedModeError(ConfigurationError):
    """Operation requested in a clock mode it does not support."""


class DataFormatError(ValueError):
    """Malformed input data; carries a 1-based record index when known."""

    def __init__(self, message: str, record: int | None = None):
        if record is not None:
            message = f"{message} (record {record})"
        super().__init__(message)
        self.record = record


class InsufficientDataError(ValueError):
    """Not enough data to compute the requested statistic."""


class ConstantSequenceError(InsufficientDataError):
    """Autocorrelation is undefined for a constant bit sequence."""


class UnderpoweredRunError(ConfigurationError):
    """A statistical check was requested with too few samples to resolve it."""

    def __init__(self, message: str, required_n: int):
        super().__init__(message)
        self.required_n = required_n
