"""Exception types raised across the package.

Every data-level problem derives from :class:`DataError` so callers (and the
command line) can separate bad input from programming errors.
"""


class UtilcpError(Exception):
    """Base class for all package errors."""


class DataError(UtilcpError, ValueError):
    """Input data violates a contract."""


class EmptyFold(DataError):
    pass


class UnknownLabel(DataError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DuplicateLabel(DataError):
    pass


class ZeroPenalty(DataError):
    pass


class NonPositiveCost(DataError):
    pass


class InvalidAlpha(DataError):
    pass


class MissingBound(DataError):
    pass


class EmptyCalibration(DataError):
    pass


class EmptyTest(DataError):
    pass


class EmptyInput(DataError):
    pass


class MissingBaseline(DataError):
    pass


class IncompatibleReports(DataError):
    pass


class InvalidTask(DataError):
    pass


class TooLarge(DataError):
    pass


class CycleDetected(DataError):
    pass


class OrphanLabel(DataError):
    pass


class ParseError(DataError):
    """Malformed file content; carries the 1-based row and optional column."""

    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DimensionMismatch(ParseError):
    pass


class LabelOutOfRange(ParseError):
    pass


class PredictorMismatch(DataError):
    """A serialized predictor is used with a different cost model."""
