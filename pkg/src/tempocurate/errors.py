"""Domain error taxonomy.

Every error that can cross the HTTP boundary carries a stable machine code
from the closed set documented in the README; the service maps codes to
HTTP statuses.
"""

from __future__ import annotations


class TempocurateError(Exception):
    """Base class for all domain errors."""

    machine_code = "error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class CsvFormatError(TempocurateError):
    machine_code = "csv_format"

    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class DuplicateCellError(TempocurateError):
    machine_code = "duplicate_cell"


class UnknownCellError(TempocurateError):
    machine_code = "unknown_cell"


class NoVersionAtDateError(TempocurateError):
    machine_code = "no_version_at_date"


class UnknownUpdateError(TempocurateError):
    machine_code = "unknown_update"


class NotPendingError(TempocurateError):
    machine_code = "not_pending"


class DuplicateUploadError(TempocurateError):
    machine_code = "duplicate_upload"


class UndefinedCorrelationError(TempocurateError):
    machine_code = "undefined_correlation"
