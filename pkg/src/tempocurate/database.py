"""Persistent application state: one SQLite file behind the rewriter.

``CurationDb`` is the single entry point the HTTP service and the CLI's
direct mode share.  Every public method returns JSON-ready dicts (the wire
shapes), so both frontends emit byte-identical output for identical state.
All access is serialized through one lock: mutations require it for
correctness, reads share it because a sqlite3 connection object is not
safe for concurrent use.
"""

from __future__ import annotations

import hashlib
import json
import sqlite3
import threading
from datetime import date, datetime, timezone
from typing import Optional, Sequence

from . import curation, ingest, provenance, rewriter
from .curation import ProposedUpdate
from .errors import DuplicateUploadError, UnknownCellError
from .period import FOREVER, Period
from .rewriter import InsertCurrent, NonsequencedQuery, SnapshotQuery
from .store import CellKey, CellPredicate, Dimension, cell_predicate


def proposal_json(proposal: ProposedUpdate) -> dict:
    return {
        "id": proposal.id,
        "week": proposal.cell.week.isoformat(),
        "dimension": proposal.cell.dimension.value,
        "subcategory": proposal.cell.subcategory,
        "old_value": proposal.old_value,
        "new_value": proposal.new_value,
        "old_file_id": proposal.old_file_id,
        "new_file_id": proposal.new_file_id,
        "status": proposal.status,
        "decided_at": proposal.decided_at,
    }


def _cell_json(cell: CellKey) -> dict:
    return {
        "week": cell.week.isoformat(),
        "dimension": cell.dimension.value,
        "subcategory": cell.subcategory,
    }


def utc_now() -> datetime:
    return datetime.now(tz=timezone.utc)


class CurationDb:
    def __init__(self, db_path: str):
        self._lock = threading.Lock()
        self._conn = rewriter.connect(db_path)
        with self._lock:
            rewriter.execute(rewriter.ddl(), self._conn)
            # Side table for upload idempotency; not part of the public
            # schema emitted by ddl().
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS ingest_results ("
                " file_id TEXT PRIMARY KEY,"
                " content_sha256 TEXT NOT NULL,"
                " response_json TEXT NOT NULL)"
            )
            self._conn.commit()

    def close(self) -> None:
        self._conn.close()

    # -- ingestion ---------------------------------------------------------

    def upload(self, file_id: str, release_date: date, data: bytes) -> dict:
        """Ingest one release: parse, check, diff, persist, report.

        Idempotent per file_id: replaying the exact same content returns
        the original response; different content is a conflict.
        """
        digest = hashlib.sha256(release_date.isoformat().encode() + b"\n" + data).hexdigest()
        with self._lock:
            previous = self._conn.execute(
                "SELECT content_sha256, response_json FROM ingest_results WHERE file_id = ?",
                (file_id,),
            ).fetchone()
            if previous is not None:
                if previous[0] == digest:
                    return json.loads(previous[1])
                raise DuplicateUploadError(
                    f"upload {file_id!r} already exists with different content"
                )

            upload = ingest.parse_csv(data, file_id=file_id, release_date=release_date)
            violations = ingest.check_consistency(upload)
            current = self._snapshot_map(release_date)
            new_cells, changes = ingest.diff_upload(upload, current)

            self._conn.execute("BEGIN")
            try:
                self._conn.execute(
                    "INSERT INTO uploads (file_id, release_date, row_count) VALUES (?, ?, ?)",
                    (file_id, release_date.isoformat(), len(upload.rows)),
                )
                for cell, count in new_cells:
                    rewriter.execute(
                        rewriter.rewrite(InsertCurrent(cell, count, file_id, release_date)),
                        self._conn,
                    )
                ids = curation.add_proposals(self._conn, changes)
                proposals = curation.get_proposals(self._conn, ids)
                response = {
                    "file_id": file_id,
                    "release_date": release_date.isoformat(),
                    "new_cells": [
                        {**_cell_json(cell), "count": count} for cell, count in new_cells
                    ],
                    "proposals": [proposal_json(p) for p in proposals],
                    "violations": [
                        {
                            "week": v.week.isoformat(),
                            "dimension": v.dimension.value,
                            "reported_total": v.reported_total,
                            "computed_sum": v.computed_sum,
                        }
                        for v in violations
                    ],
                }
                self._conn.execute(
                    "INSERT INTO ingest_results (file_id, content_sha256, response_json) "
                    "VALUES (?, ?, ?)",
                    (file_id, digest, json.dumps(response)),
                )
            except Exception:
                self._conn.rollback()
                raise
            self._conn.commit()
            return response

    def uploads(self) -> dict:
        with self._lock:
            rows = self._conn.execute(
                "SELECT file_id, release_date, row_count FROM uploads "
                "ORDER BY release_date, file_id"
            ).fetchall()
        return {
            "uploads": [
                {"file_id": file_id, "release_date": release_date, "row_count": row_count}
                for file_id, release_date, row_count in rows
            ]
        }

    # -- curation ----------------------------------------------------------

    def updates(self, status: Optional[str] = None, group_by_week: bool = False) -> dict:
        with self._lock:
            proposals = curation.list_updates(self._conn, status)
        if not group_by_week:
            return {"updates": [proposal_json(p) for p in proposals]}
        groups: list[dict] = []
        for proposal in proposals:
            week = proposal.cell.week.isoformat()
            if not groups or groups[-1]["week"] != week:
                groups.append({"week": week, "proposals": []})
            groups[-1]["proposals"].append(proposal_json(proposal))
        return {"groups": groups}

    def accept(self, ids: Sequence[int], effective: Optional[date], now: datetime) -> dict:
        with self._lock:
            decided = curation.accept(self._conn, ids, effective, now)
        return {"accepted": [p.id for p in decided]}

    def reject(self, ids: Sequence[int], now: datetime) -> dict:
        with self._lock:
            decided = curation.reject(self._conn, ids, now)
        return {"rejected": [p.id for p in decided]}

    # -- temporal reads ----------------------------------------------------

    def _snapshot_map(self, asof: date) -> dict[CellKey, tuple[int, str]]:
        rows = rewriter.execute(rewriter.rewrite(SnapshotQuery(asof)), self._conn)
        return {
            CellKey(date.fromisoformat(week), Dimension(dimension), subcategory): (count, file_id)
            for week, dimension, subcategory, count, file_id in rows
        }

    def snapshot(self, asof: date) -> dict:
        with self._lock:
            rows = rewriter.execute(rewriter.rewrite(SnapshotQuery(asof)), self._conn)
        return {
            "asof": asof.isoformat(),
            "cells": [
                {
                    "week": week,
                    "dimension": dimension,
                    "subcategory": subcategory,
                    "count": count,
                    "file_id": file_id,
                }
                for week, dimension, subcategory, count, file_id in rows
            ],
        }

    def history(self, cell: CellKey) -> dict:
        with self._lock:
            rows = rewriter.execute(
                rewriter.rewrite(NonsequencedQuery(cell_predicate(cell))), self._conn
            )
        if not rows:
            raise UnknownCellError(f"cell {cell} has no versions")
        return {
            **_cell_json(cell),
            "versions": [
                {
                    "count": count,
                    "file_id": file_id,
                    "valid_from": valid_from,
                    "valid_to": valid_to,
                }
                for _, _, _, count, file_id, valid_from, valid_to in rows
            ],
        }

    # -- provenance --------------------------------------------------------

    def first_value(self, cell: CellKey) -> dict:
        with self._lock:
            count, file_id, since = provenance.first_value(self._conn, cell)
        return {**_cell_json(cell), "count": count, "file_id": file_id,
                "valid_from": since.isoformat()}

    def current_value(self, cell: CellKey, asof: date) -> dict:
        with self._lock:
            count, file_id = provenance.current_value(self._conn, cell, asof)
        return {**_cell_json(cell), "asof": asof.isoformat(), "count": count, "file_id": file_id}

    def value_range(self, cell: CellKey) -> dict:
        with self._lock:
            low, high, n_versions = provenance.value_range(self._conn, cell)
        return {**_cell_json(cell), "min": low, "max": high, "n_versions": n_versions}

    def rejected(self, predicate: CellPredicate) -> dict:
        with self._lock:
            rejected = provenance.rejected_updates(self._conn, predicate)
        return {"rejected": [proposal_json(p) for p in rejected]}

    def update_counts(
        self,
        dimension: Dimension,
        subcategories: Optional[Sequence[str]],
        window: Period,
    ) -> dict:
        with self._lock:
            counts = provenance.update_counts(self._conn, dimension, subcategories, window)
        return {
            "dimension": dimension.value,
            "window": _window_json(window),
            "counts": {name: counts[name] for name in sorted(counts)},
        }

    def most_updated(self, dimension: Dimension, window: Period) -> dict:
        with self._lock:
            result = provenance.most_updated(self._conn, dimension, window)
        return {
            "dimension": dimension.value,
            "window": _window_json(window),
            "subcategory": result.subcategory,
            "count": result.count,
        }

    def correlation(self, series_a: tuple[Dimension, str], series_b: tuple[Dimension, str]) -> dict:
        with self._lock:
            value = provenance.update_correlation(self._conn, series_a, series_b)
            n_uploads = self._conn.execute("SELECT COUNT(*) FROM uploads").fetchone()[0]
        return {
            "a": {"dimension": series_a[0].value, "subcategory": series_a[1]},
            "b": {"dimension": series_b[0].value, "subcategory": series_b[1]},
            "correlation": value,
            "n_uploads": n_uploads,
        }


def _window_json(window: Period) -> dict:
    return {"from": window.start.isoformat(), "to": window.end.isoformat()}


def parse_window(from_text: Optional[str], to_text: Optional[str]) -> Period:
    """Build a query window from optional ISO bounds; defaults to all time."""
    start = date.fromisoformat(from_text) if from_text else date(1, 1, 1)
    end = date.fromisoformat(to_text) if to_text else FOREVER
    return Period(start, end)
