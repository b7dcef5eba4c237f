"""Exception types shared across the package."""

__all__ = ["NoRootError", "IngestionError"]


class NoRootError(ArithmeticError):
    """A bracketed root search failed to locate a sign change.

    Carries the last bracket endpoints tried so callers can report
    how far the search expanded before giving up.
    """

    def __init__(self, message, lo=None, hi=None):
        super().__init__(message)
        self.lo = lo
        self.hi = hi


class IngestionError(Exception):
    """An input file could not be parsed into the expected schema.

    Distinct from ValueError so the command line tool can map parse
    failures and parameter-validation failures to different exit codes.
    """
