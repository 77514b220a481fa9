"""In-memory valid-time temporal table of fatality counts.

This is the reference engine: it implements the temporal semantics
directly on Python values, and the SQL rewriter is verified against it.
Per cell, version periods are kept pairwise disjoint and contiguous, with
the latest version open-ended (``valid_to = FOREVER``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from datetime import date
from typing import Optional

from .errors import DuplicateCellError, UnknownCellError
from .period import FOREVER, Period, contains


class Dimension(enum.Enum):
    """Closed set of data categories in the weekly releases."""

    SEX = "Sex"
    AGE = "Age"
    HEALTH_BOARD = "HealthBoard"
    LOCAL_AUTHORITY = "LocalAuthority"
    LOCATION = "Location"
    TOTAL = "Total"


def parse_dimension(name: str) -> Dimension:
    try:
        return Dimension(name)
    except ValueError:
        valid = ", ".join(d.value for d in Dimension)
        raise ValueError(f"unknown dimension {name!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class CellKey:
    """One data item: the count for (week, dimension, subcategory).

    Weeks are keyed by their Monday start date.  The Total dimension has
    the single subcategory "All".
    """

    week: date
    dimension: Dimension
    subcategory: str

    def __post_init__(self) -> None:
        if self.week.weekday() != 0:
            raise ValueError(f"week {self.week.isoformat()} is not a Monday")
        if not self.subcategory:
            raise ValueError("subcategory must be non-empty")
        if self.dimension is Dimension.TOTAL and self.subcategory != "All":
            raise ValueError('the Total dimension has the single subcategory "All"')

    def __str__(self) -> str:
        return f"{self.week.isoformat()}/{self.dimension.value}/{self.subcategory}"


# Dimension members are not orderable, so CellKey defines no ordering of
# its own; sort with this key (week, dimension name, subcategory).
def cell_sort_key(cell: CellKey) -> tuple[date, str, str]:
    return (cell.week, cell.dimension.value, cell.subcategory)


@dataclass(frozen=True)
class CellPredicate:
    """Equality filter over cell keys; None fields match anything."""

    week: Optional[date] = None
    dimension: Optional[Dimension] = None
    subcategory: Optional[str] = None

    def matches(self, cell: CellKey) -> bool:
        return (
            (self.week is None or cell.week == self.week)
            and (self.dimension is None or cell.dimension == self.dimension)
            and (self.subcategory is None or cell.subcategory == self.subcategory)
        )


MATCH_ALL = CellPredicate()


def cell_predicate(cell: CellKey) -> CellPredicate:
    """Predicate matching exactly one cell."""
    return CellPredicate(cell.week, cell.dimension, cell.subcategory)


@dataclass(frozen=True)
class VersionedCount:
    """One temporal row: the count held during ``period`` and its source file."""

    cell: CellKey
    count: int
    file_id: str
    period: Period


class TemporalTable:
    """Mutable set of versioned counts with sequenced-update semantics.

    Thread-compatible, not thread-safe: callers serialize mutation.
    """

    def __init__(self) -> None:
        self._cells: dict[CellKey, list[VersionedCount]] = {}

    def insert_current(self, cell: CellKey, count: int, file_id: str, start: date) -> None:
        """First appearance of a cell: one open-ended version from ``start``."""
        if cell in self._cells:
            raise DuplicateCellError(f"cell {cell} already has a version")
        if count < 0:
            raise ValueError(f"count must be non-negative, got {count}")
        if start >= FOREVER:
            raise ValueError("validity cannot start at or after the FOREVER sentinel")
        self._cells[cell] = [VersionedCount(cell, count, file_id, Period(start, FOREVER))]

    def sequenced_update(self, cell: CellKey, new_count: int, new_file_id: str, start: date) -> None:
        """Apply new values over the applicability period [start, FOREVER).

        Versions straddling ``start`` are truncated and continued with the
        new values; versions beginning at or after ``start`` are replaced
        in place.  Values before ``start`` are untouched.
        """
        versions = self._cells.get(cell)
        if versions is None:
            raise UnknownCellError(f"cell {cell} has no versions")
        if new_count < 0:
            raise ValueError(f"count must be non-negative, got {new_count}")
        if start >= FOREVER:
            raise ValueError("update applicability must start before FOREVER")
        updated: list[VersionedCount] = []
        for version in versions:
            if version.period.end <= start:
                updated.append(version)
            elif version.period.start < start:
                updated.append(replace(version, period=Period(version.period.start, start)))
                updated.append(
                    VersionedCount(cell, new_count, new_file_id, Period(start, version.period.end))
                )
            else:
                updated.append(VersionedCount(cell, new_count, new_file_id, version.period))
        self._cells[cell] = updated

    def snapshot(self, asof: date) -> dict[CellKey, tuple[int, str]]:
        """State of the table as of one day: cell -> (count, file_id)."""
        result: dict[CellKey, tuple[int, str]] = {}
        for cell, versions in self._cells.items():
            for version in versions:
                if contains(version.period, asof):
                    result[cell] = (version.count, version.file_id)
                    break
        return result

    def history(self, cell: CellKey) -> list[VersionedCount]:
        """All versions of a cell ordered by period start; [] if unknown."""
        return list(self._cells.get(cell, []))

    def nonsequenced_scan(self, predicate: CellPredicate) -> list[VersionedCount]:
        """Every version of every matching cell, ignoring period semantics."""
        found = [
            version
            for cell, versions in self._cells.items()
            if predicate.matches(cell)
            for version in versions
        ]
        found.sort(key=lambda v: (cell_sort_key(v.cell), v.period.start))
        return found

    def cells(self) -> list[CellKey]:
        return sorted(self._cells, key=cell_sort_key)
