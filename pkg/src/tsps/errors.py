"""Exception types raised across the package.

Each error subclasses ``ValueError`` so callers that only care about bad
input can catch that; the CLI maps the classes to exit codes.
"""


class TspsError(ValueError):
    """Base class for all package errors."""


class InvalidDensityError(TspsError):
    pass


class UnsupportedDimensionError(TspsError):
    pass


class DomainError(TspsError):
    """A point or parameter lies outside its allowed domain."""


class InvalidOrderError(TspsError):
    pass


class EmptyInputError(TspsError):
    pass


class InstanceTooLargeError(TspsError):
    pass


class DegenerateCurveError(TspsError):
    pass


class ZeroLengthCurveError(DegenerateCurveError):
    pass


class ResolutionMismatchError(TspsError):
    pass


class DimensionError(TspsError):
    pass


class InfeasibleError(TspsError):
    pass


class CalibrationError(TspsError):
    pass


class InvalidInputError(TspsError):
    pass


class ParseError(TspsError):
    pass
