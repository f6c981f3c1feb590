"""Exception hierarchy shared by every module.

Everything raised on bad data derives from :class:`ContextRecError`, which the
CLI maps to exit code 3.
"""

from __future__ import annotations


class ContextRecError(Exception):
    """Base class for data and domain errors."""


class ParseError(ContextRecError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip() if where else message)


class DomainError(ContextRecError):
    """An input is well formed but outside the operation's domain."""


class DerivationError(DomainError):
    pass


class UnmappedLocation(DomainError):
    pass


class NoInterestFound(DomainError):
    pass


class MissingLocation(DomainError):
    pass


class UndefinedPrecision(DomainError):
    pass
