"""Exception hierarchy. CLI exit codes are attached to the classes."""


class FbmError(Exception):
    exit_code = 1


class ConfigError(FbmError, ValueError):
    """Bad parameters or configuration; message names the offending key."""

    exit_code = 2


class DimensionError(ConfigError):
    pass


class DomainError(ConfigError):
    pass


class CatalogError(ConfigError):
    pass


class RangeError(ConfigError, IndexError):
    pass


class PreconditionError(ConfigError):
    pass


class NumericalBlowupError(FbmError, FloatingPointError):
    """Raised when a coefficient is NaN/Inf or exceeds the blowup threshold."""

    exit_code = 3

    def __init__(self, message, time=None, last_finite=None):
        super().__init__(message)
        self.time = time
        self.last_finite = last_finite


class NonContractionError(FbmError):
    """Successive approximation differences kept growing."""

    exit_code = 3

    def __init__(self, message, ratios=()):
        super().__init__(message)
        self.ratios = list(ratios)
