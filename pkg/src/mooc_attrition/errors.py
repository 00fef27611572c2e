"""Exception hierarchy.

Each family maps onto one CLI exit code: usage problems exit with 2,
data or integrity problems with 3 and numerical failures with 4.
"""

from __future__ import annotations


class MoocAttritionError(Exception):
    exit_code = 1


class UsageError(MoocAttritionError, ValueError):
    exit_code = 2


class DataError(MoocAttritionError, ValueError):
    exit_code = 3


class ParseError(DataError):
    """A row in an input file could not be parsed."""

    def __init__(self, path, line: int, message: str) -> None:
        self.path = str(path)
        self.line = line
        super().__init__(f"{self.path}:{line}: {message}")


class IntegrityError(DataError):
    """Input files parse but contradict each other (orphans, duplicates...)."""


class SchemaError(DataError):
    """Requested features are missing from a table."""


class OutOfWindowError(DataError):
    """A timestamp falls outside the course window."""


class FoldError(DataError):
    """Cross-validation folds cannot be built (a class is too small)."""


class LeakageError(DataError):
    """A training step touched rows of its own test fold."""


class NumericError(MoocAttritionError, ArithmeticError):
    exit_code = 4


class ZeroVarianceError(NumericError):
    def __init__(self, covariate: str) -> None:
        self.covariate = covariate
        super().__init__(f"covariate {covariate!r} has zero variance")


class SingularHessianError(NumericError):
    pass


class NoEventsError(NumericError):
    pass
