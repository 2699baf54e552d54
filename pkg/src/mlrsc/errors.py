"""Exception types raised across the package."""


class MLRSCError(Exception):
    """Base class for all package errors."""


class ValidationError(MLRSCError, ValueError):
    """An argument or input violates a documented precondition."""


class ParseError(ValidationError):
    """A text input could not be parsed.

    Carries the 1-based ``line`` number when it is known.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CapacityError(MLRSCError):
    """A dense code path was asked to materialize something too large."""


class RankDeficiencyError(MLRSCError):
    """The Krylov basis has fewer columns than the requested rank."""
