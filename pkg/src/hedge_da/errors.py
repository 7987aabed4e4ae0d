"""Exception hierarchy shared by the library and the command line."""


class HedgeError(Exception):
    """Base class for every error raised by hedge_da."""


class ParameterError(HedgeError, ValueError):
    """An algorithm or bound parameter is outside its admissible range."""


class DomainError(HedgeError, ValueError):
    """A loss value lies outside the declared bounds, or is not a number."""


class StateError(HedgeError, RuntimeError):
    """An operation was requested on a state that cannot support it."""


class InputError(HedgeError, ValueError):
    """Input data is unusable: wrong shape, empty, exhausted."""


class ParseError(InputError):
    """A file could not be parsed; carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ConfigError(HedgeError, ValueError):
    """An experiment configuration is inconsistent."""
