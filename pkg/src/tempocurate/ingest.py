"""Weekly CSV releases: parsing, consistency checking, and diffing.

The ingestion contract is a normalized 4-column CSV
(``week_start,dimension,subcategory,count``); see the repo's data/
directory for samples.  Everything here is pure: parsing and checking
look only at the upload, diffing additionally takes a read-only snapshot
of the current table state.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from datetime import date
from typing import Mapping, Optional

from .errors import CsvFormatError
from .store import CellKey, Dimension, cell_sort_key, parse_dimension

CSV_HEADER = ["week_start", "dimension", "subcategory", "count"]

# Registered category scheme: the full subcategory set per dimension, used
# to decide when a dimension's counts are complete enough to check against
# the reported total.  Matches the NRS weekly-release categories.
DEFAULT_SCHEME: Mapping[Dimension, frozenset[str]] = {
    Dimension.SEX: frozenset({"Female", "Male"}),
    Dimension.AGE: frozenset({"0", "1-14", "15-44", "45-64", "65-74", "75-84", "85+"}),
    Dimension.HEALTH_BOARD: frozenset(
        {
            "Ayrshire and Arran",
            "Borders",
            "Dumfries and Galloway",
            "Fife",
            "Forth Valley",
            "Grampian",
            "Greater Glasgow and Clyde",
            "Highland",
            "Lanarkshire",
            "Lothian",
            "Orkney",
            "Shetland",
            "Tayside",
            "Western Isles",
        }
    ),
    Dimension.LOCAL_AUTHORITY: frozenset(
        {
            "Aberdeen City",
            "Aberdeenshire",
            "Angus",
            "Argyll and Bute",
            "City of Edinburgh",
            "Clackmannanshire",
            "Dumfries and Galloway",
            "Dundee City",
            "East Ayrshire",
            "East Dunbartonshire",
            "East Lothian",
            "East Renfrewshire",
            "Edinburgh",
            "Falkirk",
            "Fife",
            "Glasgow City",
            "Highland",
            "Inverclyde",
            "Midlothian",
            "Moray",
            "Na h-Eileanan Siar",
            "North Ayrshire",
            "North Lanarkshire",
            "Orkney Islands",
            "Perth and Kinross",
            "Renfrewshire",
            "Scottish Borders",
            "Shetland Islands",
            "South Ayrshire",
            "South Lanarkshire",
            "Stirling",
            "West Dunbartonshire",
            "West Lothian",
        }
    ),
    Dimension.LOCATION: frozenset(
        {"Care Home", "Home/Non-institution", "Hospital", "Other institution"}
    ),
    Dimension.TOTAL: frozenset({"All"}),
}


@dataclass(frozen=True)
class Upload:
    """One weekly release, parsed into cell/count rows."""

    file_id: str
    release_date: date
    rows: tuple[tuple[CellKey, int], ...]


@dataclass(frozen=True)
class ConsistencyViolation:
    """A dimension's subcategory counts disagree with the reported total."""

    week: date
    dimension: Dimension
    reported_total: int
    computed_sum: int


@dataclass(frozen=True)
class ProposedChange:
    """A detected value change, not yet persisted or decided."""

    cell: CellKey
    old_value: int
    new_value: int
    old_file_id: str
    new_file_id: str


def parse_csv(data: bytes, file_id: str, release_date: date) -> Upload:
    """Parse one release; collects every malformed line into one error."""
    problems: list[str] = []
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CsvFormatError([f"not UTF-8: {exc}"]) from None

    reader = csv.reader(io.StringIO(text, newline=""))
    records = list(reader)
    if not records or records[0] != CSV_HEADER:
        got = ",".join(records[0]) if records else "<empty file>"
        raise CsvFormatError(
            [f"line 1: malformed header {got!r} (expected {','.join(CSV_HEADER)!r})"]
        )

    rows: list[tuple[CellKey, int]] = []
    first_line: dict[CellKey, int] = {}
    for lineno, record in enumerate(records[1:], start=2):
        if not record:
            continue
        if len(record) != 4:
            problems.append(f"line {lineno}: expected 4 fields, got {len(record)}")
            continue
        week_text, dimension_text, subcategory, count_text = record
        try:
            week = date.fromisoformat(week_text)
        except ValueError:
            problems.append(f"line {lineno}: invalid week_start {week_text!r}")
            continue
        try:
            dimension = parse_dimension(dimension_text)
        except ValueError as exc:
            problems.append(f"line {lineno}: {exc}")
            continue
        try:
            count = int(count_text, base=10)
        except ValueError:
            problems.append(f"line {lineno}: count {count_text!r} is not an integer")
            continue
        if count < 0:
            problems.append(f"line {lineno}: count {count} is negative")
            continue
        try:
            cell = CellKey(week, dimension, subcategory)
        except ValueError as exc:
            problems.append(f"line {lineno}: {exc}")
            continue
        if cell in first_line:
            problems.append(
                f"line {lineno}: duplicate cell {cell} (first seen on line {first_line[cell]})"
            )
            continue
        first_line[cell] = lineno
        rows.append((cell, count))

    if problems:
        raise CsvFormatError(problems)
    return Upload(file_id=file_id, release_date=release_date, rows=tuple(rows))


def serialize_csv(upload: Upload) -> bytes:
    """Inverse of parse_csv over the row payload."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for cell, count in upload.rows:
        writer.writerow([cell.week.isoformat(), cell.dimension.value, cell.subcategory, count])
    return buffer.getvalue().encode("utf-8")


def check_consistency(
    upload: Upload, scheme: Mapping[Dimension, frozenset[str]] = DEFAULT_SCHEME
) -> list[ConsistencyViolation]:
    """Compare each complete dimension's sum against the reported total.

    For every week carrying a (Total, All) row, a dimension is checked only
    when every subcategory registered for it in ``scheme`` is present for
    that week; partial breakdowns are skipped, not flagged.
    """
    by_week: dict[date, dict[Dimension, dict[str, int]]] = {}
    for cell, count in upload.rows:
        by_week.setdefault(cell.week, {}).setdefault(cell.dimension, {})[cell.subcategory] = count

    violations: list[ConsistencyViolation] = []
    for week in sorted(by_week):
        dimensions = by_week[week]
        total_row = dimensions.get(Dimension.TOTAL)
        if not total_row:
            continue
        reported_total = total_row["All"]
        for dimension in sorted(dimensions, key=lambda d: d.value):
            if dimension is Dimension.TOTAL:
                continue
            registered = scheme.get(dimension)
            present = dimensions[dimension]
            if not registered or not registered <= set(present):
                continue
            computed_sum = sum(present[subcategory] for subcategory in registered)
            if computed_sum != reported_total:
                violations.append(
                    ConsistencyViolation(week, dimension, reported_total, computed_sum)
                )
    return violations


def diff_upload(
    upload: Upload, current: Mapping[CellKey, tuple[int, str]]
) -> tuple[list[tuple[CellKey, int]], list[ProposedChange]]:
    """Split a release against the current snapshot.

    Cells absent from the snapshot are new (inserted without curation);
    cells whose count differs become proposed changes; unchanged cells
    produce nothing, so re-uploading current data is a fixpoint.
    """
    new_cells: list[tuple[CellKey, int]] = []
    proposals: list[ProposedChange] = []
    for cell, count in upload.rows:
        existing: Optional[tuple[int, str]] = current.get(cell)
        if existing is None:
            new_cells.append((cell, count))
        else:
            old_count, old_file_id = existing
            if old_count != count:
                proposals.append(
                    ProposedChange(cell, old_count, count, old_file_id, upload.file_id)
                )
    new_cells.sort(key=lambda item: cell_sort_key(item[0]))
    proposals.sort(key=lambda change: cell_sort_key(change.cell))
    return new_cells, proposals
