"""Exception hierarchy shared by every pwarx module."""


class PwarxError(Exception):
    """Base class for all errors raised by pwarx."""


class InvalidOrder(PwarxError, ValueError):
    pass


class DatasetTooShort(PwarxError, ValueError):
    pass


class DimensionMismatch(PwarxError, ValueError):
    pass


class LengthMismatch(PwarxError, ValueError):
    pass


class InsufficientInitialCondition(PwarxError, ValueError):
    pass


class DenominatorZero(PwarxError, ZeroDivisionError):
    pass


class ZeroNoisePower(PwarxError, ZeroDivisionError):
    pass


class ZeroNormalizer(PwarxError, ZeroDivisionError):
    pass


class SingularSystem(PwarxError, ArithmeticError):
    pass


class MalformedCsv(PwarxError, ValueError):
    """Raised for unreadable CSV input; ``row`` is the 1-based line number."""

    def __init__(self, message, row=None):
        if row is not None:
            message = f"line {row}: {message}"
        super().__init__(message)
        self.row = row


class NonContiguousTime(MalformedCsv):
    pass


class ConfigError(PwarxError, ValueError):
    pass


class ModelFormatError(PwarxError, ValueError):
    pass
