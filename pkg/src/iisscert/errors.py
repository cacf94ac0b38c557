"""Exception hierarchy shared by every module of the package."""


class IISSError(Exception):
    """Base class for all errors raised by iisscert."""


class InputError(IISSError, ValueError):
    """Malformed or non-finite input data."""


class DimensionError(InputError):
    """Matrix or vector shapes do not match."""


class DomainError(IISSError, ValueError):
    """A time argument lies outside the domain where a quantity is defined."""


class ConfigurationError(IISSError, ValueError):
    """A run cannot be set up as requested (e.g. step size incompatible with delays)."""


class PreconditionError(IISSError, ValueError):
    """A certificate or construction was invoked outside its hypotheses."""


class NumericalError(IISSError, ArithmeticError):
    """A computation produced a non-finite or singular result."""
