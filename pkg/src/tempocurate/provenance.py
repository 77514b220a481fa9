"""The seven update-provenance query families.

Queries 1-4 look at one cell's version history or its rejected proposals;
5 and 6 count update events per subcategory; 7 correlates two
subcategories' per-upload accepted-change counts.  "Update" throughout
means an accepted change: rejected proposals are visible only through the
rejected log, because they never touched the temporal table.
"""

from __future__ import annotations

import sqlite3
import statistics
from dataclasses import dataclass
from datetime import date
from typing import Optional, Sequence

from .curation import STATUS_ACCEPTED, ProposedUpdate, rejected_log as _rejected_log
from .errors import NoVersionAtDateError, UndefinedCorrelationError, UnknownCellError
from .period import FOREVER, Period, coalesce, contains
from .rewriter import NonsequencedQuery, SnapshotQuery, execute, rewrite
from .store import CellKey, CellPredicate, Dimension, cell_predicate

ALL_TIME = Period(date(1, 1, 1), FOREVER)


@dataclass(frozen=True)
class UpdateEvent:
    """One accepted change: the boundary between consecutive versions."""

    cell: CellKey
    from_value: int
    to_value: int
    effective: date
    file_id: str


@dataclass(frozen=True)
class MostUpdated:
    """Argmax result for query 6; subcategory is None when nothing updated."""

    subcategory: Optional[str]
    count: int


def _versions(conn: sqlite3.Connection, predicate: CellPredicate) -> list[tuple]:
    return execute(rewrite(NonsequencedQuery(predicate)), conn)


def _cell_history(conn: sqlite3.Connection, cell: CellKey) -> list[tuple[int, str, Period]]:
    rows = _versions(conn, cell_predicate(cell))
    return [
        (count, file_id, Period(date.fromisoformat(valid_from), date.fromisoformat(valid_to)))
        for _, _, _, count, file_id, valid_from, valid_to in rows
    ]


def first_value(conn: sqlite3.Connection, cell: CellKey) -> tuple[int, str, date]:
    """Query 1: the value as first uploaded, its source, and when."""
    history = _cell_history(conn, cell)
    if not history:
        raise UnknownCellError(f"cell {cell} has no versions")
    count, file_id, period = min(history, key=lambda entry: entry[2].start)
    return count, file_id, period.start


def current_value(conn: sqlite3.Connection, cell: CellKey, asof: date) -> tuple[int, str]:
    """Query 2: the value in effect on the given day."""
    rows = execute(rewrite(SnapshotQuery(asof, cell_predicate(cell))), conn)
    if not rows:
        raise NoVersionAtDateError(f"cell {cell} has no version containing {asof.isoformat()}")
    _, _, _, count, file_id = rows[0]
    return count, file_id


def value_range(conn: sqlite3.Connection, cell: CellKey) -> tuple[int, int, int]:
    """Query 3: (min, max, number of versions) over all uploads.

    Versions are counted after coalescing, so n_versions is always one
    more than the number of update events for the cell.
    """
    history = _cell_history(conn, cell)
    if not history:
        raise UnknownCellError(f"cell {cell} has no versions")
    segments = coalesce([((count, file_id), period) for count, file_id, period in history])
    counts = [value[0] for (value, _) in segments]
    return min(counts), max(counts), len(segments)


def rejected_updates(conn: sqlite3.Connection, predicate: CellPredicate) -> list[ProposedUpdate]:
    """Query 4: rejected proposals matching a filter, by decision time."""
    return _rejected_log(conn, predicate)


def update_events(conn: sqlite3.Connection, cell: CellKey) -> list[UpdateEvent]:
    """Consecutive version pairs of a cell's coalesced history."""
    history = _cell_history(conn, cell)
    segments = coalesce([((count, file_id), period) for count, file_id, period in history])
    events = []
    for (old, _), ((new_count, new_file), period) in zip(segments, segments[1:]):
        events.append(UpdateEvent(cell, old[0], new_count, period.start, new_file))
    return events


def _dimension_events(
    conn: sqlite3.Connection, dimension: Dimension, subcategory: str
) -> list[UpdateEvent]:
    rows = _versions(conn, CellPredicate(dimension=dimension, subcategory=subcategory))
    weeks = sorted({date.fromisoformat(row[0]) for row in rows})
    events: list[UpdateEvent] = []
    for week in weeks:
        events.extend(update_events(conn, CellKey(week, dimension, subcategory)))
    return events


def _known_subcategories(conn: sqlite3.Connection, dimension: Dimension) -> list[str]:
    rows = conn.execute(
        "SELECT DISTINCT subcategory FROM covid_deaths WHERE dimension = ? ORDER BY subcategory",
        (dimension.value,),
    ).fetchall()
    return [row[0] for row in rows]


def update_counts(
    conn: sqlite3.Connection,
    dimension: Dimension,
    subcategories: Optional[Sequence[str]] = None,
    window: Period = ALL_TIME,
) -> dict[str, int]:
    """Query 5: accepted-update counts per subcategory, across all weeks.

    Counts the update events whose effective date falls in ``window``.
    With no explicit subcategory list, every subcategory present in the
    table for the dimension is reported.
    """
    if subcategories is None:
        subcategories = _known_subcategories(conn, dimension)
    return {
        subcategory: sum(
            1
            for event in _dimension_events(conn, dimension, subcategory)
            if contains(window, event.effective)
        )
        for subcategory in subcategories
    }


def most_updated(
    conn: sqlite3.Connection, dimension: Dimension, window: Period = ALL_TIME
) -> MostUpdated:
    """Query 6: the subcategory with the most updates in the window.

    Ties break to the lexicographically smaller name; when nothing in the
    dimension was updated the result is empty (subcategory None, count 0).
    """
    counts = update_counts(conn, dimension, None, window)
    best = min(counts.items(), key=lambda item: (-item[1], item[0]), default=None)
    if best is None or best[1] == 0:
        return MostUpdated(None, 0)
    return MostUpdated(best[0], best[1])


def _accepted_per_upload(
    conn: sqlite3.Connection, dimension: Dimension, subcategory: str, upload_ids: Sequence[str]
) -> list[int]:
    rows = conn.execute(
        "SELECT new_file_id, COUNT(*) FROM proposed_updates "
        "WHERE status = ? AND dimension = ? AND subcategory = ? GROUP BY new_file_id",
        (STATUS_ACCEPTED, dimension.value, subcategory),
    ).fetchall()
    by_upload = dict(rows)
    return [by_upload.get(file_id, 0) for file_id in upload_ids]


def update_correlation(
    conn: sqlite3.Connection,
    series_a: tuple[Dimension, str],
    series_b: tuple[Dimension, str],
) -> float:
    """Query 7: Pearson correlation of per-upload accepted-change counts.

    Both series are vectors over all uploads in release order; element u is
    the number of accepted changes to the subcategory attributed to upload
    u, summed across all weeks.  Degenerate inputs (fewer than two uploads,
    or a constant vector) raise the undefined-correlation error rather than
    returning NaN.
    """
    uploads = [
        row[0]
        for row in conn.execute(
            "SELECT file_id FROM uploads ORDER BY release_date, file_id"
        ).fetchall()
    ]
    if len(uploads) < 2:
        raise UndefinedCorrelationError(
            f"correlation needs at least 2 uploads, have {len(uploads)}"
        )
    vector_a = _accepted_per_upload(conn, series_a[0], series_a[1], uploads)
    vector_b = _accepted_per_upload(conn, series_b[0], series_b[1], uploads)
    for name, vector in (("first", vector_a), ("second", vector_b)):
        if len(set(vector)) < 2:
            raise UndefinedCorrelationError(
                f"the {name} series has zero variance across uploads"
            )
    return statistics.correlation(vector_a, vector_b)
