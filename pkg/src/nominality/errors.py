"""Exception hierarchy.

Two broad families: data problems (bad files, bad shapes, degenerate label
vectors) and numeric failures (diverging optimization, singular systems).
The CLI maps these onto distinct exit codes.
"""

from __future__ import annotations


class NominalityError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(NominalityError):
    """Invalid or inconsistent configuration."""


class DataError(NominalityError):
    """Base class for problems with input data."""


class ParseError(DataError):
    """A CSV cell or row could not be parsed.

    Attributes:
        row: zero-based index of the offending data row, if known.
    """

    def __init__(self, message: str, row: int | None = None) -> None:
        super().__init__(message)
        self.row = row


class LabelError(DataError):
    """A label value is not 0 or 1, or the label column is unusable."""


class EmptyInput(DataError):
    """An input that must be non-empty was empty."""


class ShapeError(DataError):
    """Array dimensions do not match what an operation requires."""


class SpecError(DataError):
    """A synthetic-data specification is internally inconsistent."""


class DegenerateLabels(DataError):
    """Labels contain only one class, so threshold metrics are undefined."""


class NumericError(NominalityError):
    """Base class for numeric failures."""


class TrainingDiverged(NumericError):
    """Training loss became non-finite.

    Attributes:
        epoch: zero-based epoch at which divergence was detected.
    """

    def __init__(self, message: str, epoch: int) -> None:
        super().__init__(message)
        self.epoch = epoch


class SingularSystem(NumericError):
    """A linear system was singular; regularization may be required."""
