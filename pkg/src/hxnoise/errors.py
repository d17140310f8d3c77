"""Exception types shared across the package."""


class HXError(Exception):
    """Base class for package errors."""


class DomainError(HXError, ValueError):
    """A value lies outside the domain an operation accepts (non-finite, negative flow, ...)."""


class DataError(HXError, ValueError):
    """Input data is malformed or insufficient (missing channel, too few samples, short frame)."""


class SingularSystemError(DomainError):
    """The steady-state linear system has no unique solution."""
