"""Exception types shared across the package."""


class CanError(Exception):
    """Base class for all errors raised by canser."""


class DimensionError(CanError, ValueError):
    """Operand shapes are incompatible."""


class InvalidInputError(CanError, ValueError):
    """An argument violates an operation's precondition."""


class ParseError(CanError, ValueError):
    """A text record could not be parsed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class ValidationError(CanError, ValueError):
    """Parsed data is well-formed but semantically inconsistent."""


class ConfigError(CanError, ValueError):
    """Configuration or data splits are unusable."""
