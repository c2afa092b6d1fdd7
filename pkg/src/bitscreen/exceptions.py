"""Exception hierarchy shared across the package."""


class BitsError(Exception):
    """Base class for every error raised by bitscreen."""


class InputError(BitsError, ValueError):
    """Malformed or non-finite input data."""


class DimensionError(InputError):
    """Array shapes are inconsistent or too small."""


class ConfigError(BitsError, ValueError):
    """Invalid configuration or hyperparameter."""


class NumericalBreakdown(BitsError, ArithmeticError):
    """A factorization pivot or residual fell below its numerical floor."""
