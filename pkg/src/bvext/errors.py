"""Exception types raised by the toolkit."""


class BVError(Exception):
    """Base class for all toolkit errors."""


class InvalidInputError(BVError, ValueError):
    """Degenerate or malformed input (empty sets, zero-size images, ...)."""


class ContractViolation(BVError, ValueError):
    """A documented pre/postcondition or structural invariant does not hold."""


class ScaleError(BVError, ValueError):
    """A requested radius or width is below the grid scale."""


class UndefinedRatioError(BVError, ArithmeticError):
    """A ratio with vanishing denominator was requested."""


class ResolutionError(BVError, ValueError):
    """A domain feature cannot be represented at the requested level."""


class ParseError(BVError, ValueError):
    """A mask file could not be parsed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset
