"""Half-open validity periods over calendar dates.

A period ``[start, end)`` includes ``start`` and excludes ``end``; two
periods that meet (``p.end == q.start``) do not overlap, so adjacent weekly
versions tile a cell's timeline without gaps or double counting.  The
open-ended "still valid" state is represented by the sentinel date
``FOREVER`` (9999-12-31), which compares as an ordinary date.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Iterable, Optional, TypeVar

FOREVER = date(9999, 12, 31)

V = TypeVar("V")


def forever() -> date:
    """The sentinel end date of an open-ended period."""
    return FOREVER


@dataclass(frozen=True, order=True)
class Period:
    """Half-open interval of days: start inclusive, end exclusive."""

    start: date
    end: date

    def __post_init__(self) -> None:
        if self.start >= self.end:
            raise ValueError(f"empty or reversed period: [{self.start}, {self.end})")

    def __str__(self) -> str:
        return f"[{self.start.isoformat()}, {self.end.isoformat()})"


def overlaps(p: Period, q: Period) -> bool:
    """True iff the two periods share at least one day."""
    return max(p.start, q.start) < min(p.end, q.end)


def intersect(p: Period, q: Period) -> Optional[Period]:
    """The common sub-period, or None when the periods are disjoint."""
    start = max(p.start, q.start)
    end = min(p.end, q.end)
    if start < end:
        return Period(start, end)
    return None


def contains(p: Period, d: date) -> bool:
    """True iff day ``d`` falls inside ``p`` (start inclusive, end exclusive)."""
    return p.start <= d < p.end


def coalesce(versions: Iterable[tuple[V, Period]]) -> list[tuple[V, Period]]:
    """Merge adjacent equal-valued periods into maximal ones.

    Input periods must be pairwise disjoint (any order).  The result is
    sorted by start; entries whose periods meet and whose values are equal
    are merged, so the per-day valuation is preserved exactly.
    """
    items = sorted(versions, key=lambda item: item[1].start)
    for (_, prev), (_, cur) in zip(items, items[1:]):
        if prev.end > cur.start:
            raise ValueError(f"overlapping periods: {prev} and {cur}")
    merged: list[tuple[V, Period]] = []
    for value, period in items:
        if merged:
            last_value, last_period = merged[-1]
            if last_value == value and last_period.end == period.start:
                merged[-1] = (value, Period(last_period.start, period.end))
                continue
        merged.append((value, period))
    return merged
