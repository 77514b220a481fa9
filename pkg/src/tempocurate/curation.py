"""Lifecycle of proposed updates: pending, accepted, rejected.

Proposals live in the ``proposed_updates`` table.  Accepting applies the
change to the temporal table through the rewriter; rejecting only stamps
the decision.  Batch decisions are all-or-nothing: the caller's
transaction wraps every status change and every sequenced update.
"""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass
from datetime import date, datetime, timezone
from typing import Optional, Sequence

from .errors import NotPendingError, UnknownUpdateError
from .ingest import ProposedChange
from .rewriter import SequencedUpdate, execute, rewrite
from .store import CellKey, CellPredicate, Dimension, cell_sort_key

STATUS_PENDING = "pending"
STATUS_ACCEPTED = "accepted"
STATUS_REJECTED = "rejected"

TIMESTAMP_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


def format_timestamp(moment: datetime) -> str:
    """Audit timestamps: UTC, second granularity, trailing Z."""
    return moment.astimezone(timezone.utc).strftime(TIMESTAMP_FORMAT)


def parse_timestamp(text: str) -> datetime:
    return datetime.strptime(text, TIMESTAMP_FORMAT).replace(tzinfo=timezone.utc)


@dataclass(frozen=True)
class ProposedUpdate:
    id: int
    cell: CellKey
    old_value: int
    new_value: int
    old_file_id: str
    new_file_id: str
    status: str
    decided_at: Optional[str]


_COLUMNS = (
    "id, week, dimension, subcategory, old_value, new_value, "
    "old_file_id, new_file_id, status, decided_at"
)


def _from_row(row: tuple) -> ProposedUpdate:
    (pid, week, dimension, subcategory, old_value, new_value,
     old_file_id, new_file_id, status, decided_at) = row
    cell = CellKey(date.fromisoformat(week), Dimension(dimension), subcategory)
    return ProposedUpdate(
        pid, cell, old_value, new_value, old_file_id, new_file_id, status, decided_at
    )


def add_proposals(conn: sqlite3.Connection, changes: Sequence[ProposedChange]) -> list[int]:
    """Persist detected changes as pending proposals; returns their ids."""
    ids = []
    for change in changes:
        cursor = conn.execute(
            "INSERT INTO proposed_updates "
            "(week, dimension, subcategory, old_value, new_value, "
            " old_file_id, new_file_id, status, decided_at) "
            "VALUES (?, ?, ?, ?, ?, ?, ?, 'pending', NULL)",
            (
                change.cell.week.isoformat(),
                change.cell.dimension.value,
                change.cell.subcategory,
                change.old_value,
                change.new_value,
                change.old_file_id,
                change.new_file_id,
            ),
        )
        ids.append(cursor.lastrowid)
    return ids


def list_updates(conn: sqlite3.Connection, status: Optional[str] = None) -> list[ProposedUpdate]:
    """Proposals with the given status, in (week, dimension, subcategory, id) order."""
    if status is None:
        rows = conn.execute(f"SELECT {_COLUMNS} FROM proposed_updates").fetchall()
    else:
        rows = conn.execute(
            f"SELECT {_COLUMNS} FROM proposed_updates WHERE status = ?", (status,)
        ).fetchall()
    proposals = [_from_row(row) for row in rows]
    proposals.sort(key=lambda p: (cell_sort_key(p.cell), p.id))
    return proposals


def list_pending(
    conn: sqlite3.Connection, group_by_week: bool = True
) -> list[tuple[date, list[ProposedUpdate]]] | list[ProposedUpdate]:
    """Pending proposals, grouped by the week they affect.

    Grouping lets a curator judge one week's update as a whole; order is
    deterministic (week ascending, then dimension, then subcategory).
    """
    pending = list_updates(conn, STATUS_PENDING)
    if not group_by_week:
        return pending
    groups: list[tuple[date, list[ProposedUpdate]]] = []
    for proposal in pending:
        if groups and groups[-1][0] == proposal.cell.week:
            groups[-1][1].append(proposal)
        else:
            groups.append((proposal.cell.week, [proposal]))
    return groups


def get_proposals(conn: sqlite3.Connection, ids: Sequence[int]) -> list[ProposedUpdate]:
    found: dict[int, ProposedUpdate] = {}
    for pid in ids:
        row = conn.execute(
            f"SELECT {_COLUMNS} FROM proposed_updates WHERE id = ?", (pid,)
        ).fetchone()
        if row is None:
            raise UnknownUpdateError(f"no proposed update with id {pid}")
        found[pid] = _from_row(row)
    return [found[pid] for pid in ids]


def _check_all_pending(proposals: Sequence[ProposedUpdate]) -> None:
    for proposal in proposals:
        if proposal.status != STATUS_PENDING:
            raise NotPendingError(
                f"proposed update {proposal.id} is {proposal.status}, not pending"
            )


def _release_date(conn: sqlite3.Connection, file_id: str) -> date:
    row = conn.execute(
        "SELECT release_date FROM uploads WHERE file_id = ?", (file_id,)
    ).fetchone()
    if row is None:
        raise UnknownUpdateError(f"no upload with file_id {file_id!r}")
    return date.fromisoformat(row[0])


def accept(
    conn: sqlite3.Connection,
    ids: Sequence[int],
    effective: Optional[date],
    now: datetime,
) -> list[ProposedUpdate]:
    """Accept pending proposals and apply them as sequenced updates.

    Without an explicit effective date each proposal takes effect from its
    own upload's release date.  Any unknown or non-pending id aborts the
    whole call before any effect.
    """
    if conn.in_transaction:
        raise RuntimeError("accept owns its transaction; do not nest")
    conn.execute("BEGIN")
    try:
        proposals = get_proposals(conn, ids)
        _check_all_pending(proposals)
        decided_at = format_timestamp(now)
        decided = []
        for proposal in sorted(proposals, key=lambda p: p.id):
            effective_from = effective or _release_date(conn, proposal.new_file_id)
            conn.execute(
                "UPDATE proposed_updates SET status = 'accepted', decided_at = ? WHERE id = ?",
                (decided_at, proposal.id),
            )
            execute(
                rewrite(
                    SequencedUpdate(
                        proposal.cell, proposal.new_value, proposal.new_file_id, effective_from
                    )
                ),
                conn,
            )
            decided.append(proposal)
    except Exception:
        conn.rollback()
        raise
    conn.commit()
    return decided


def reject(conn: sqlite3.Connection, ids: Sequence[int], now: datetime) -> list[ProposedUpdate]:
    """Reject pending proposals; the temporal table is untouched."""
    if conn.in_transaction:
        raise RuntimeError("reject owns its transaction; do not nest")
    conn.execute("BEGIN")
    try:
        proposals = get_proposals(conn, ids)
        _check_all_pending(proposals)
        decided_at = format_timestamp(now)
        for proposal in proposals:
            conn.execute(
                "UPDATE proposed_updates SET status = 'rejected', decided_at = ? WHERE id = ?",
                (decided_at, proposal.id),
            )
    except Exception:
        conn.rollback()
        raise
    conn.commit()
    return proposals


def rejected_log(conn: sqlite3.Connection, predicate: CellPredicate) -> list[ProposedUpdate]:
    """Rejected proposals matching the filter, ordered by decision time."""
    rejected = [
        proposal
        for proposal in list_updates(conn, STATUS_REJECTED)
        if predicate.matches(proposal.cell)
    ]
    rejected.sort(key=lambda p: (p.decided_at or "", p.id))
    return rejected
