"""Command-line client for curation workflows.

Every data subcommand runs in one of two modes: ``--db PATH`` operates on
the database file directly (default path from ``TEMPOCURATE_DB``), and
``--url BASE`` talks to a running service.  Both modes produce identical
``--json`` output for identical state, because the direct mode calls the
same facade the service wraps.

Exit codes: 0 success, 1 domain error (unknown cell, rejected decision,
undefined correlation, connection failure), 2 usage error.
"""

from __future__ import annotations

import json
import sys
import urllib.parse
from datetime import date
from typing import Callable, Optional, Sequence

import click

from .curation import parse_timestamp
from .database import CurationDb, parse_window, utc_now
from .errors import TempocurateError
from .store import CellKey, CellPredicate, Dimension, parse_dimension

FOREVER_TEXT = "9999-12-31"


class DomainFailure(Exception):
    def __init__(self, machine_code: str, message: str):
        self.machine_code = machine_code
        self.message = message


class DirectBackend:
    """Runs commands against the database file in-process."""

    def __init__(self, db_path: str):
        try:
            self.db = CurationDb(db_path)
        except Exception as exc:
            raise DomainFailure("database", f"cannot open {db_path}: {exc}")

    def close(self) -> None:
        self.db.close()

    def _call(self, fn, *args):
        try:
            return fn(*args)
        except TempocurateError as exc:
            raise DomainFailure(exc.machine_code, str(exc))

    def upload(self, file_id: str, release_iso: str, data: bytes) -> dict:
        return self._call(self.db.upload, file_id, date.fromisoformat(release_iso), data)

    def uploads(self) -> dict:
        return self._call(self.db.uploads)

    def updates(self, status: Optional[str], group_by_week: bool) -> dict:
        return self._call(lambda: self.db.updates(status, group_by_week=group_by_week))

    def accept(self, ids: Sequence[int], effective_iso: Optional[str],
               decided_iso: Optional[str]) -> dict:
        effective = date.fromisoformat(effective_iso) if effective_iso else None
        return self._call(self.db.accept, ids, effective, _decision_time(decided_iso))

    def reject(self, ids: Sequence[int], decided_iso: Optional[str]) -> dict:
        return self._call(self.db.reject, ids, _decision_time(decided_iso))

    def history(self, cell: CellKey) -> dict:
        return self._call(self.db.history, cell)

    def snapshot(self, asof_iso: str) -> dict:
        return self._call(self.db.snapshot, date.fromisoformat(asof_iso))

    def first(self, cell: CellKey) -> dict:
        return self._call(self.db.first_value, cell)

    def current(self, cell: CellKey, asof_iso: Optional[str]) -> dict:
        asof = date.fromisoformat(asof_iso) if asof_iso else utc_now().date()
        return self._call(self.db.current_value, cell, asof)

    def range(self, cell: CellKey) -> dict:
        return self._call(self.db.value_range, cell)

    def rejected(self, week_iso: Optional[str], dimension: Optional[Dimension],
                 subcategory: Optional[str]) -> dict:
        predicate = CellPredicate(
            week=date.fromisoformat(week_iso) if week_iso else None,
            dimension=dimension,
            subcategory=subcategory,
        )
        return self._call(self.db.rejected, predicate)

    def counts(self, dimension: Dimension, subcategories: Sequence[str],
               from_iso: Optional[str], to_iso: Optional[str]) -> dict:
        window = parse_window(from_iso, to_iso)
        return self._call(self.db.update_counts, dimension, list(subcategories) or None, window)

    def most_updated(self, dimension: Dimension, from_iso: Optional[str],
                     to_iso: Optional[str]) -> dict:
        return self._call(self.db.most_updated, dimension, parse_window(from_iso, to_iso))

    def correlation(self, a: tuple[Dimension, str], b: tuple[Dimension, str]) -> dict:
        return self._call(self.db.correlation, a, b)


class RemoteBackend:
    """Runs commands against a service over HTTP."""

    def __init__(self, base_url: str):
        import httpx

        self._httpx = httpx
        self.client = httpx.Client(base_url=base_url.rstrip("/"), timeout=30.0)

    def close(self) -> None:
        self.client.close()

    def _request(self, method: str, path: str, **kwargs) -> dict:
        try:
            response = self.client.request(method, path, **kwargs)
        except self._httpx.HTTPError as exc:
            raise DomainFailure("connection", str(exc))
        payload = response.json()
        if response.status_code >= 400:
            raise DomainFailure(
                payload.get("machine_code", "error"), payload.get("message", response.text)
            )
        return payload

    def upload(self, file_id: str, release_iso: str, data: bytes) -> dict:
        return self._request(
            "POST", "/uploads",
            params={"file_id": file_id, "release_date": release_iso},
            content=data, headers={"content-type": "text/csv"},
        )

    def uploads(self) -> dict:
        return self._request("GET", "/uploads")

    def updates(self, status: Optional[str], group_by_week: bool) -> dict:
        params = {}
        if status:
            params["status"] = status
        if group_by_week:
            params["group"] = "week"
        return self._request("GET", "/updates", params=params)

    def _decision(self, path: str, body: dict, decided_iso: Optional[str]) -> dict:
        headers = {"X-Test-Clock": decided_iso} if decided_iso else {}
        return self._request("POST", path, json=body, headers=headers)

    def accept(self, ids: Sequence[int], effective_iso: Optional[str],
               decided_iso: Optional[str]) -> dict:
        body: dict = {"ids": list(ids)}
        if effective_iso:
            body["effective"] = effective_iso
        return self._decision("/updates/accept", body, decided_iso)

    def reject(self, ids: Sequence[int], decided_iso: Optional[str]) -> dict:
        return self._decision("/updates/reject", {"ids": list(ids)}, decided_iso)

    def history(self, cell: CellKey) -> dict:
        return self._request("GET", _cell_path(cell))

    def snapshot(self, asof_iso: str) -> dict:
        return self._request("GET", "/snapshot", params={"asof": asof_iso})

    def first(self, cell: CellKey) -> dict:
        return self._request("GET", "/provenance/first", params=_cell_params(cell))

    def current(self, cell: CellKey, asof_iso: Optional[str]) -> dict:
        params = _cell_params(cell)
        if asof_iso:
            params["asof"] = asof_iso
        return self._request("GET", "/provenance/current", params=params)

    def range(self, cell: CellKey) -> dict:
        return self._request("GET", "/provenance/range", params=_cell_params(cell))

    def rejected(self, week_iso: Optional[str], dimension: Optional[Dimension],
                 subcategory: Optional[str]) -> dict:
        params = {}
        if week_iso:
            params["week"] = week_iso
        if dimension:
            params["dimension"] = dimension.value
        if subcategory is not None:
            params["subcategory"] = subcategory
        return self._request("GET", "/provenance/rejected", params=params)

    def counts(self, dimension: Dimension, subcategories: Sequence[str],
               from_iso: Optional[str], to_iso: Optional[str]) -> dict:
        params: list[tuple[str, str]] = [("dimension", dimension.value)]
        params += [("subcategory", name) for name in subcategories]
        params += _window_params(from_iso, to_iso)
        return self._request("GET", "/provenance/update-counts", params=params)

    def most_updated(self, dimension: Dimension, from_iso: Optional[str],
                     to_iso: Optional[str]) -> dict:
        params = [("dimension", dimension.value)] + _window_params(from_iso, to_iso)
        return self._request("GET", "/provenance/most-updated", params=params)

    def correlation(self, a: tuple[Dimension, str], b: tuple[Dimension, str]) -> dict:
        return self._request("GET", "/provenance/correlation", params={
            "a_dim": a[0].value, "a_sub": a[1], "b_dim": b[0].value, "b_sub": b[1],
        })


def _decision_time(decided_iso: Optional[str]):
    return parse_timestamp(decided_iso) if decided_iso else utc_now()


def _cell_path(cell: CellKey) -> str:
    quoted = urllib.parse.quote(cell.subcategory, safe="")
    return f"/cells/{cell.week.isoformat()}/{cell.dimension.value}/{quoted}/history"


def _cell_params(cell: CellKey) -> dict:
    return {
        "week": cell.week.isoformat(),
        "dimension": cell.dimension.value,
        "subcategory": cell.subcategory,
    }


def _window_params(from_iso: Optional[str], to_iso: Optional[str]) -> list[tuple[str, str]]:
    params = []
    if from_iso:
        params.append(("from", from_iso))
    if to_iso:
        params.append(("to", to_iso))
    return params


# -- argument parsing --------------------------------------------------------


def parse_cell_arg(text: str) -> CellKey:
    """Parse WEEK/DIMENSION/SUBCATEGORY; each part may be URL-encoded."""
    parts = text.split("/", 2)
    if len(parts) != 3:
        raise click.UsageError(f"cell must be WEEK/DIMENSION/SUBCATEGORY, got {text!r}")
    week_text, dimension_text, subcategory = (urllib.parse.unquote(p) for p in parts)
    try:
        return CellKey(date.fromisoformat(week_text), parse_dimension(dimension_text),
                       subcategory)
    except ValueError as exc:
        raise click.UsageError(str(exc))


def parse_series_arg(text: str) -> tuple[Dimension, str]:
    parts = text.split("/", 1)
    if len(parts) != 2:
        raise click.UsageError(f"series must be DIMENSION/SUBCATEGORY, got {text!r}")
    dimension_text, subcategory = (urllib.parse.unquote(p) for p in parts)
    try:
        return parse_dimension(dimension_text), subcategory
    except ValueError as exc:
        raise click.UsageError(str(exc))


def parse_ids_arg(text: str) -> list[int]:
    try:
        ids = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise click.UsageError(f"ids must be comma-separated integers, got {text!r}")
    if not ids:
        raise click.UsageError("ids must list at least one update id")
    return ids


def parse_date_arg(text: Optional[str], name: str) -> Optional[str]:
    if text is None:
        return None
    try:
        return date.fromisoformat(text).isoformat()
    except ValueError:
        raise click.UsageError(f"{name} must be an ISO date, got {text!r}")


def parse_dimension_arg(text: str) -> Dimension:
    try:
        return parse_dimension(text)
    except ValueError as exc:
        raise click.UsageError(str(exc))


def mode_options(fn: Callable) -> Callable:
    fn = click.option("--json", "as_json", is_flag=True,
                      help="Emit the service's JSON shape instead of text.")(fn)
    fn = click.option("--url", "base_url", metavar="URL",
                      help="Talk to a running service at this base URL.")(fn)
    fn = click.option("--db", "db_path", envvar="TEMPOCURATE_DB", metavar="PATH",
                      help="Operate directly on this database file "
                           "(default: $TEMPOCURATE_DB).")(fn)
    return fn


def open_backend(db_path: Optional[str], base_url: Optional[str]):
    if db_path and base_url:
        raise click.UsageError("use either --db or --url, not both")
    if base_url:
        return RemoteBackend(base_url)
    if db_path:
        return DirectBackend(db_path)
    raise click.UsageError("no database: pass --db/--url or set TEMPOCURATE_DB")


def run(backend, as_json: bool, call: Callable, render: Callable[[dict], str]) -> None:
    try:
        payload = call(backend)
    except DomainFailure as failure:
        click.echo(f"error [{failure.machine_code}]: {failure.message}", err=True)
        sys.exit(1)
    finally:
        backend.close()
    click.echo(json.dumps(payload, indent=2) if as_json else render(payload))


# -- text renderers ----------------------------------------------------------


def _proposal_line(p: dict, with_week: bool = False) -> str:
    week = f"{p['week']} " if with_week else ""
    old = "-" if p["old_value"] is None else p["old_value"]
    return (f"[{p['id']}] {week}{p['dimension']}/{p['subcategory']}: "
            f"{old} -> {p['new_value']} ({p['old_file_id']} -> {p['new_file_id']})")


def render_upload(payload: dict) -> str:
    lines = [f"{len(payload['new_cells'])} new cells, {len(payload['proposals'])} proposals"]
    for v in payload["violations"]:
        lines.append(f"consistency: {v['week']} {v['dimension']} total "
                     f"{v['reported_total']} != sum {v['computed_sum']}")
    return "\n".join(lines)


def render_groups(payload: dict) -> str:
    if not payload["groups"]:
        return "no pending updates"
    lines = []
    for group in payload["groups"]:
        lines.append(f"week {group['week']}")
        for p in group["proposals"]:
            lines.append("  " + _proposal_line(p))
    return "\n".join(lines)


def render_history(payload: dict) -> str:
    lines = [f"{payload['week']}/{payload['dimension']}/{payload['subcategory']}"]
    for v in payload["versions"]:
        until = "forever" if v["valid_to"] == FOREVER_TEXT else v["valid_to"]
        lines.append(f"  [{v['valid_from']}, {until}) count {v['count']} file {v['file_id']}")
    return "\n".join(lines)


def render_snapshot(payload: dict) -> str:
    if not payload["cells"]:
        return f"no data as of {payload['asof']}"
    return "\n".join(
        f"{c['week']} {c['dimension']}/{c['subcategory']} {c['count']} {c['file_id']}"
        for c in payload["cells"]
    )


def render_uploads(payload: dict) -> str:
    if not payload["uploads"]:
        return "no uploads"
    return "\n".join(
        f"{u['file_id']} released {u['release_date']} ({u['row_count']} rows)"
        for u in payload["uploads"]
    )


def render_rejected(payload: dict) -> str:
    if not payload["rejected"]:
        return "no rejected updates"
    return "\n".join(
        _proposal_line(p, with_week=True) + f" rejected at {p['decided_at']}"
        for p in payload["rejected"]
    )


def render_counts(payload: dict) -> str:
    if not payload["counts"]:
        return "no cells in dimension"
    return "\n".join(f"{name} {count}" for name, count in payload["counts"].items())


# -- commands ----------------------------------------------------------------


@click.group()
def main() -> None:
    """Weekly-data curation: temporal storage, review, and history queries."""


@main.command()
@mode_options
def init(db_path: Optional[str], base_url: Optional[str], as_json: bool) -> None:
    """Create the database schema (direct mode only)."""
    if base_url:
        raise click.UsageError("init works on a database file, not a URL")
    if not db_path:
        raise click.UsageError("no database: pass --db or set TEMPOCURATE_DB")
    try:
        CurationDb(db_path).close()
    except Exception as exc:
        click.echo(f"error [database]: cannot initialize {db_path}: {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps({"initialized": db_path}) if as_json else "initialized")


@main.command()
@mode_options
@click.option("--file", "csv_path", required=True,
              type=click.Path(exists=True, dir_okay=False, allow_dash=True),
              help="CSV file to ingest ('-' for stdin).")
@click.option("--file-id", required=True, help="Identifier recorded for this upload.")
@click.option("--release", "release_text", required=True, metavar="DATE",
              help="Release date of the file (ISO).")
def upload(db_path: Optional[str], base_url: Optional[str], as_json: bool,
           csv_path: str, file_id: str, release_text: str) -> None:
    """Ingest a weekly CSV and propose updates against current data."""
    release_iso = parse_date_arg(release_text, "--release")
    with click.open_file(csv_path, "rb") as handle:
        data = handle.read()
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.upload(file_id, release_iso, data), render_upload)


@main.command()
@mode_options
def pending(db_path: Optional[str], base_url: Optional[str], as_json: bool) -> None:
    """List pending updates grouped by the week they affect."""
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.updates("pending", True), render_groups)


@main.command()
@mode_options
@click.option("--ids", "ids_text", required=True, metavar="ID[,ID...]",
              help="Update ids to accept.")
@click.option("--effective", "effective_text", default=None, metavar="DATE",
              help="Date the new values take effect (default: proposing upload's "
                   "release date).")
@click.option("--decided-at", "decided_text", default=None, metavar="TIMESTAMP",
              help="Override the decision timestamp (testing).")
def accept(db_path: Optional[str], base_url: Optional[str], as_json: bool,
           ids_text: str, effective_text: Optional[str], decided_text: Optional[str]) -> None:
    """Accept pending updates, rewriting history from the effective date."""
    ids = parse_ids_arg(ids_text)
    effective_iso = parse_date_arg(effective_text, "--effective")
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.accept(ids, effective_iso, decided_text),
        lambda payload: f"accepted {len(payload['accepted'])} updates")


@main.command()
@mode_options
@click.option("--ids", "ids_text", required=True, metavar="ID[,ID...]",
              help="Update ids to reject.")
@click.option("--decided-at", "decided_text", default=None, metavar="TIMESTAMP",
              help="Override the decision timestamp (testing).")
def reject(db_path: Optional[str], base_url: Optional[str], as_json: bool,
           ids_text: str, decided_text: Optional[str]) -> None:
    """Reject pending updates; stored values stay as they are."""
    ids = parse_ids_arg(ids_text)
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.reject(ids, decided_text),
        lambda payload: f"rejected {len(payload['rejected'])} updates")


@main.command()
@mode_options
@click.option("--cell", "cell_text", required=True, metavar="WEEK/DIMENSION/SUBCATEGORY",
              help="Cell to show, e.g. 2020-04-20/Sex/Female.")
def history(db_path: Optional[str], base_url: Optional[str], as_json: bool,
            cell_text: str) -> None:
    """Show every stored version of one cell with its validity period."""
    cell = parse_cell_arg(cell_text)
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.history(cell), render_history)


@main.command()
@mode_options
@click.option("--asof", "asof_text", required=True, metavar="DATE",
              help="Date the snapshot is taken at.")
def snapshot(db_path: Optional[str], base_url: Optional[str], as_json: bool,
             asof_text: str) -> None:
    """Show the table as it was believed to be on a given date."""
    asof_iso = parse_date_arg(asof_text, "--asof")
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.snapshot(asof_iso), render_snapshot)


@main.command()
@mode_options
def uploads(db_path: Optional[str], base_url: Optional[str], as_json: bool) -> None:
    """List ingested files in release order."""
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.uploads(), render_uploads)


@main.group()
def query() -> None:
    """Questions about how values changed across uploads."""


@query.command("first")
@mode_options
@click.option("--cell", "cell_text", required=True, metavar="WEEK/DIMENSION/SUBCATEGORY")
def query_first(db_path: Optional[str], base_url: Optional[str], as_json: bool,
                cell_text: str) -> None:
    """First value ever recorded for a cell."""
    cell = parse_cell_arg(cell_text)
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.first(cell),
        lambda p: f"count {p['count']} file {p['file_id']} since {p['valid_from']}")


@query.command("current")
@mode_options
@click.option("--cell", "cell_text", required=True, metavar="WEEK/DIMENSION/SUBCATEGORY")
@click.option("--asof", "asof_text", default=None, metavar="DATE",
              help="Evaluate at this date instead of today.")
def query_current(db_path: Optional[str], base_url: Optional[str], as_json: bool,
                  cell_text: str, asof_text: Optional[str]) -> None:
    """Value of a cell as of a date (default: today)."""
    cell = parse_cell_arg(cell_text)
    asof_iso = parse_date_arg(asof_text, "--asof")
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.current(cell, asof_iso),
        lambda p: f"count {p['count']} file {p['file_id']} asof {p['asof']}")


@query.command("range")
@mode_options
@click.option("--cell", "cell_text", required=True, metavar="WEEK/DIMENSION/SUBCATEGORY")
def query_range(db_path: Optional[str], base_url: Optional[str], as_json: bool,
                cell_text: str) -> None:
    """Smallest and largest value a cell has held, and how many versions."""
    cell = parse_cell_arg(cell_text)
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.range(cell),
        lambda p: f"min {p['min']} max {p['max']} versions {p['n_versions']}")


@query.command("rejected")
@mode_options
@click.option("--week", "week_text", default=None, metavar="DATE")
@click.option("--dimension", "dimension_text", default=None)
@click.option("--subcategory", default=None)
def query_rejected(db_path: Optional[str], base_url: Optional[str], as_json: bool,
                   week_text: Optional[str], dimension_text: Optional[str],
                   subcategory: Optional[str]) -> None:
    """Rejected updates, optionally filtered by cell parts."""
    week_iso = parse_date_arg(week_text, "--week")
    dimension = parse_dimension_arg(dimension_text) if dimension_text else None
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.rejected(week_iso, dimension, subcategory),
        render_rejected)


@query.command("counts")
@mode_options
@click.option("--dimension", "dimension_text", required=True)
@click.option("--subcategory", "subcategories", multiple=True,
              help="Restrict to these subcategories (repeatable).")
@click.option("--from", "from_text", default=None, metavar="DATE")
@click.option("--to", "to_text", default=None, metavar="DATE")
def query_counts(db_path: Optional[str], base_url: Optional[str], as_json: bool,
                 dimension_text: str, subcategories: tuple[str, ...],
                 from_text: Optional[str], to_text: Optional[str]) -> None:
    """Accepted-update counts per subcategory of a dimension."""
    dimension = parse_dimension_arg(dimension_text)
    from_iso, to_iso = _window_args(from_text, to_text)
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.counts(dimension, subcategories, from_iso, to_iso),
        render_counts)


@query.command("most-updated")
@mode_options
@click.option("--dimension", "dimension_text", required=True)
@click.option("--from", "from_text", default=None, metavar="DATE")
@click.option("--to", "to_text", default=None, metavar="DATE")
def query_most_updated(db_path: Optional[str], base_url: Optional[str], as_json: bool,
                       dimension_text: str, from_text: Optional[str],
                       to_text: Optional[str]) -> None:
    """Subcategory with the most accepted updates in a dimension."""
    dimension = parse_dimension_arg(dimension_text)
    from_iso, to_iso = _window_args(from_text, to_text)
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.most_updated(dimension, from_iso, to_iso),
        lambda p: "no updates" if p["subcategory"] is None
        else f"{p['subcategory']} {p['count']}")


@query.command("correlation")
@mode_options
@click.option("--a", "a_text", required=True, metavar="DIMENSION/SUBCATEGORY")
@click.option("--b", "b_text", required=True, metavar="DIMENSION/SUBCATEGORY")
def query_correlation(db_path: Optional[str], base_url: Optional[str], as_json: bool,
                      a_text: str, b_text: str) -> None:
    """Pearson correlation of two cells' per-upload accepted-change counts."""
    series_a = parse_series_arg(a_text)
    series_b = parse_series_arg(b_text)
    backend = open_backend(db_path, base_url)
    run(backend, as_json, lambda b: b.correlation(series_a, series_b),
        lambda p: f"correlation {p['correlation']}")


def _window_args(from_text: Optional[str], to_text: Optional[str]):
    from_iso = parse_date_arg(from_text, "--from")
    to_iso = parse_date_arg(to_text, "--to")
    if from_iso and to_iso and from_iso >= to_iso:
        raise click.UsageError("--from must be before --to")
    return from_iso, to_iso


@main.command()
@click.option("--db", "db_path", envvar="TEMPOCURATE_DB", metavar="PATH",
              help="Database file to serve (default: $TEMPOCURATE_DB).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True, type=int)
@click.option("--test-mode", is_flag=True,
              help="Honor the X-Test-Clock header (testing only).")
def serve(db_path: Optional[str], host: str, port: int, test_mode: bool) -> None:
    """Run the HTTP API (and the web UI if its build is present)."""
    if not db_path:
        raise click.UsageError("no database: pass --db or set TEMPOCURATE_DB")
    from .service import serve as run_service

    try:
        run_service(db_path, bind_address=host, port=port, test_mode=test_mode)
    except OSError as exc:
        click.echo(f"error [serve]: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
