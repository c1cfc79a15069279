"""Exception types raised across the package."""


class GgpsError(Exception):
    """Base class for all package errors."""


class DomainError(GgpsError, ValueError):
    """An argument lies outside the domain of the requested quantity."""


class SeriesDivergence(GgpsError, ArithmeticError):
    """A truncated series failed its decay or conditioning test."""


class RootNotBracketed(GgpsError, ArithmeticError):
    """A bracketing root solve could not find a sign change."""


class NonConvergence(GgpsError, RuntimeError):
    """An iterative fit exhausted its iteration budget."""


class SingularInformation(GgpsError, ArithmeticError):
    """The observed information matrix could not be inverted."""


class ParseError(GgpsError, ValueError):
    """A data file contains an unusable line."""

    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class EmptyDataset(GgpsError, ValueError):
    """A data file yielded no observations."""
