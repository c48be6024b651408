"""Exception and warning types shared across the simulator."""


class GridSimError(Exception):
    """Base class for all simulator errors."""


class InvalidDimensionError(GridSimError, ValueError):
    pass


class LayoutMismatchError(GridSimError, ValueError):
    pass


class NumericRangeError(GridSimError, ArithmeticError):
    """Raised when an input would overflow or leave the supported numeric range."""


class ConstructionQualityError(GridSimError):
    """Codeword construction missed its stabilizer-expectation floor."""

    def __init__(self, message, achieved):
        super().__init__(message)
        self.achieved = list(achieved)


class MeasurementUnderflowError(GridSimError, ArithmeticError):
    pass


class FitFailureError(GridSimError):
    """Exponential fit could not be performed; carries the raw series."""

    def __init__(self, message, series):
        super().__init__(message)
        self.series = list(series)


class ConfigError(GridSimError, ValueError):
    def __init__(self, message, path=None):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class TruncationWarning(UserWarning):
    """State weight is creeping into the top of the truncated Fock space."""
