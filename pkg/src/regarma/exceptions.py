"""Exception hierarchy shared across the package."""


class RegarmaError(Exception):
    """Base class for all package errors."""


class InputError(RegarmaError, ValueError):
    """Malformed user input (bad file, missing column, wrong shapes)."""


class NonFiniteError(InputError):
    """NaN or infinite entries found where finite data is required."""


class ConstantColumnError(InputError):
    def __init__(self, name):
        super().__init__(f"column {name!r} is constant and cannot be standardized")
        self.name = name


class OrderTooLargeError(InputError):
    """p + q leaves no effective sample."""


class DimensionMismatchError(InputError):
    """Array or penalty lengths do not match the design blocks."""


class InsufficientHistoryError(InputError):
    """Not enough lagged values supplied for a one-step prediction."""


class TooFewSamplesError(InputError):
    """Sample too short for the requested folds or lags."""


class ConfigError(InputError):
    """Invalid or unsupported configuration."""


class NumericalError(RegarmaError, ArithmeticError):
    """A fit produced non-finite values or failed to converge where required."""
