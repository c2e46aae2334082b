"""Exception hierarchy shared by every udet module."""


class UdetError(Exception):
    """Base class for all errors raised by udet."""


class ConfigurationError(UdetError, ValueError):
    """Shapes, layer parameters or run settings are inconsistent."""


class StateError(UdetError, RuntimeError):
    """An operation was invoked in the wrong order (e.g. backward before forward)."""


class NumericError(UdetError, FloatingPointError):
    """Non-finite values reached a computation that requires finite input."""


class DivergenceError(NumericError):
    """Training produced a non-finite gradient or loss."""


class ParseError(UdetError, ValueError):
    """A file did not conform to its declared text or binary format."""


class UnsupportedFormatError(ParseError):
    """A well-formed file uses a feature this package deliberately does not read."""


class UndefinedMetricError(UdetError, ValueError):
    """A metric was requested over an empty population."""
