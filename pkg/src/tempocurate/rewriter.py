"""Compile temporal statements into plain SQL over an explicit-period table.

The backend table ``covid_deaths`` carries ``valid_from``/``valid_to`` TEXT
columns as part of its primary key; dates are ISO-8601 strings, so plain
string comparison implements every temporal predicate.  Each statement
kind rewrites to a fixed number of parameterized SQL statements
(snapshot 1, nonsequenced 1, sequenced update 3, insert 1) regardless of
data size.
"""

from __future__ import annotations

import sqlite3
from dataclasses import dataclass, field
from datetime import date
from typing import Sequence, Union

from .period import FOREVER
from .store import CellKey, CellPredicate

Scalar = Union[str, int]


@dataclass(frozen=True)
class SnapshotQuery:
    asof: date
    predicate: CellPredicate = field(default_factory=CellPredicate)


@dataclass(frozen=True)
class NonsequencedQuery:
    predicate: CellPredicate = field(default_factory=CellPredicate)


@dataclass(frozen=True)
class SequencedUpdate:
    cell: CellKey
    new_count: int
    new_file_id: str
    start: date


@dataclass(frozen=True)
class InsertCurrent:
    cell: CellKey
    count: int
    file_id: str
    start: date


TemporalStatement = Union[SnapshotQuery, NonsequencedQuery, SequencedUpdate, InsertCurrent]


@dataclass(frozen=True)
class SqlBatch:
    """Ordered parameterized statements; executes atomically."""

    statements: tuple[tuple[str, tuple[Scalar, ...]], ...]


class SqliteDialect:
    """SQL printer for the embedded SQLite 3 target.

    Other backends (PostgreSQL, MySQL) would subclass and override the
    placeholder/DDL quirks; only SQLite is implemented.
    """

    placeholder = "?"

    def ddl_statements(self) -> list[str]:
        return [
            """
            CREATE TABLE IF NOT EXISTS covid_deaths (
                week TEXT NOT NULL,
                dimension TEXT NOT NULL,
                subcategory TEXT NOT NULL,
                "count" INTEGER NOT NULL CHECK ("count" >= 0),
                file_id TEXT NOT NULL,
                valid_from TEXT NOT NULL,
                valid_to TEXT NOT NULL CHECK (valid_from < valid_to),
                PRIMARY KEY (week, dimension, subcategory, valid_from)
            )
            """,
            """
            CREATE TABLE IF NOT EXISTS uploads (
                file_id TEXT PRIMARY KEY,
                release_date TEXT NOT NULL,
                row_count INTEGER NOT NULL
            )
            """,
            """
            CREATE TABLE IF NOT EXISTS proposed_updates (
                id INTEGER PRIMARY KEY,
                week TEXT NOT NULL,
                dimension TEXT NOT NULL,
                subcategory TEXT NOT NULL,
                old_value INTEGER NOT NULL,
                new_value INTEGER NOT NULL,
                old_file_id TEXT NOT NULL,
                new_file_id TEXT NOT NULL,
                status TEXT NOT NULL CHECK (status IN ('pending', 'accepted', 'rejected')),
                decided_at TEXT NULL
            )
            """,
        ]


SQLITE = SqliteDialect()

_VERSION_COLUMNS = 'week, dimension, subcategory, "count", file_id, valid_from, valid_to'
_SNAPSHOT_COLUMNS = 'week, dimension, subcategory, "count", file_id'


def _predicate_clause(predicate: CellPredicate) -> tuple[list[str], list[Scalar]]:
    conjuncts: list[str] = []
    params: list[Scalar] = []
    if predicate.week is not None:
        conjuncts.append("week = ?")
        params.append(predicate.week.isoformat())
    if predicate.dimension is not None:
        conjuncts.append("dimension = ?")
        params.append(predicate.dimension.value)
    if predicate.subcategory is not None:
        conjuncts.append("subcategory = ?")
        params.append(predicate.subcategory)
    return conjuncts, params


def _cell_clause(cell: CellKey) -> tuple[str, list[Scalar]]:
    return (
        "week = ? AND dimension = ? AND subcategory = ?",
        [cell.week.isoformat(), cell.dimension.value, cell.subcategory],
    )


def ddl(dialect: SqliteDialect = SQLITE) -> SqlBatch:
    """Schema for the temporal table plus the uploads and proposals tables."""
    statements = tuple((" ".join(text.split()), ()) for text in dialect.ddl_statements())
    return SqlBatch(statements)


def rewrite(stmt: TemporalStatement, dialect: SqliteDialect = SQLITE) -> SqlBatch:
    """Translate one temporal statement into plain parameterized SQL."""
    if isinstance(stmt, SnapshotQuery):
        conjuncts, params = _predicate_clause(stmt.predicate)
        conjuncts.append("valid_from <= ? AND ? < valid_to")
        asof = stmt.asof.isoformat()
        params.extend([asof, asof])
        sql = (
            f"SELECT {_SNAPSHOT_COLUMNS} FROM covid_deaths "
            f"WHERE {' AND '.join(conjuncts)} "
            "ORDER BY week, dimension, subcategory"
        )
        return SqlBatch(((sql, tuple(params)),))

    if isinstance(stmt, NonsequencedQuery):
        conjuncts, params = _predicate_clause(stmt.predicate)
        where = f"WHERE {' AND '.join(conjuncts)} " if conjuncts else ""
        sql = (
            f"SELECT {_VERSION_COLUMNS} FROM covid_deaths "
            f"{where}ORDER BY week, dimension, subcategory, valid_from"
        )
        return SqlBatch(((sql, tuple(params)),))

    if isinstance(stmt, SequencedUpdate):
        cell_sql, cell_params = _cell_clause(stmt.cell)
        start = stmt.start.isoformat()
        if stmt.start >= FOREVER:
            raise ValueError("update applicability must start before FOREVER")
        # Continuation rows are inserted before the originals are truncated;
        # the new valid_from differs from every existing one, so the primary
        # key is never transiently violated.
        insert_continuation = (
            f"INSERT INTO covid_deaths ({_VERSION_COLUMNS}) "
            'SELECT week, dimension, subcategory, ?, ?, ?, valid_to FROM covid_deaths '
            f"WHERE {cell_sql} AND valid_from < ? AND ? < valid_to",
            (stmt.new_count, stmt.new_file_id, start, *cell_params, start, start),
        )
        truncate_split = (
            f"UPDATE covid_deaths SET valid_to = ? "
            f"WHERE {cell_sql} AND valid_from < ? AND ? < valid_to",
            (start, *cell_params, start, start),
        )
        replace_in_place = (
            f'UPDATE covid_deaths SET "count" = ?, file_id = ? '
            f"WHERE {cell_sql} AND valid_from >= ?",
            (stmt.new_count, stmt.new_file_id, *cell_params, start),
        )
        return SqlBatch((insert_continuation, truncate_split, replace_in_place))

    if isinstance(stmt, InsertCurrent):
        if stmt.count < 0:
            raise ValueError(f"count must be non-negative, got {stmt.count}")
        sql = (
            f"INSERT INTO covid_deaths ({_VERSION_COLUMNS}) "
            "VALUES (?, ?, ?, ?, ?, ?, '9999-12-31')"
        )
        params = (
            stmt.cell.week.isoformat(),
            stmt.cell.dimension.value,
            stmt.cell.subcategory,
            stmt.count,
            stmt.file_id,
            stmt.start.isoformat(),
        )
        return SqlBatch(((sql, params),))

    raise TypeError(f"not a temporal statement: {stmt!r}")


def connect(db_path: str) -> sqlite3.Connection:
    """Open a connection with explicit transaction control and FK checks."""
    conn = sqlite3.connect(db_path, isolation_level=None, check_same_thread=False)
    conn.execute("PRAGMA foreign_keys = ON")
    return conn


def execute(batch: SqlBatch, conn: sqlite3.Connection) -> list[tuple]:
    """Run a batch inside one transaction, rolling back on any failure.

    If the connection is already inside an explicit transaction the caller
    owns the boundary and this runs the statements without committing.
    Returns the rows produced by the batch's queries.
    """
    own_transaction = not conn.in_transaction
    cursor = conn.cursor()
    rows: list[tuple] = []
    if own_transaction:
        cursor.execute("BEGIN")
    try:
        for sql, params in batch.statements:
            cursor.execute(sql, params)
            if cursor.description is not None:
                rows.extend(cursor.fetchall())
    except Exception:
        if own_transaction:
            conn.rollback()
        raise
    if own_transaction:
        conn.commit()
    return rows


def execute_all(batches: Sequence[SqlBatch], conn: sqlite3.Connection) -> None:
    """Run several batches as one atomic unit."""
    own_transaction = not conn.in_transaction
    if own_transaction:
        conn.execute("BEGIN")
    try:
        for batch in batches:
            execute(batch, conn)
    except Exception:
        if own_transaction:
            conn.rollback()
        raise
    if own_transaction:
        conn.commit()
