"""HTTP/JSON API over a curation database.

One process owns one database file.  Mutating requests are serialized by
the database facade's lock; FastAPI runs the sync endpoints in a thread
pool, so concurrent reads proceed while writers queue.

Errors are returned as ``{"http_status", "machine_code", "message"}``.
When the app is created with ``test_mode=True``, an ``X-Test-Clock``
header (ISO-8601 UTC timestamp) overrides the wall clock for decision
timestamps, making recorded request logs replayable byte for byte.
"""

from __future__ import annotations

import socket
from datetime import date, datetime
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel
from starlette.datastructures import UploadFile as StarletteUploadFile

from .curation import parse_timestamp
from .database import CurationDb, parse_window, utc_now
from .errors import TempocurateError
from .store import CellKey, CellPredicate, parse_dimension

# Closed set of machine codes and the status each maps to.
STATUS_FOR_CODE = {
    "validation": 400,
    "csv_format": 400,
    "unknown_cell": 404,
    "no_version_at_date": 404,
    "unknown_update": 404,
    "duplicate_cell": 409,
    "duplicate_upload": 409,
    "not_pending": 409,
    "undefined_correlation": 422,
}

VALID_STATUSES = ("pending", "accepted", "rejected")


class DecisionRequest(BaseModel):
    ids: list[int]
    effective: Optional[date] = None


def error_body(status: int, code: str, message: str) -> dict:
    return {"http_status": status, "machine_code": code, "message": message}


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content=error_body(status, code, message))


class BadRequest(Exception):
    def __init__(self, message: str):
        self.message = message


def create_app(
    db_path: str,
    test_mode: bool = False,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="tempocurate", docs_url=None, redoc_url=None)
    db = CurationDb(db_path)
    app.state.db = db
    app.state.test_mode = test_mode

    def request_now(request: Request) -> datetime:
        if test_mode:
            header = request.headers.get("X-Test-Clock")
            if header is not None:
                try:
                    return parse_timestamp(header)
                except ValueError:
                    raise BadRequest(f"bad X-Test-Clock timestamp: {header!r}")
        return utc_now()

    @app.exception_handler(TempocurateError)
    def domain_error(request: Request, exc: TempocurateError) -> JSONResponse:
        status = STATUS_FOR_CODE.get(exc.machine_code, 500)
        return _error_response(status, exc.machine_code, str(exc))

    @app.exception_handler(BadRequest)
    def bad_request(request: Request, exc: BadRequest) -> JSONResponse:
        return _error_response(400, "validation", exc.message)

    @app.exception_handler(RequestValidationError)
    def invalid_request(request: Request, exc: RequestValidationError) -> JSONResponse:
        return _error_response(400, "validation", str(exc.errors()[:3]))

    def parse_date(text: str, name: str) -> date:
        try:
            return date.fromisoformat(text)
        except ValueError:
            raise BadRequest(f"{name} must be an ISO date, got {text!r}")

    def parse_cell(week: str, dimension: str, subcategory: str) -> CellKey:
        try:
            return CellKey(date.fromisoformat(week), parse_dimension(dimension), subcategory)
        except ValueError as exc:
            raise BadRequest(str(exc))

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/uploads")
    async def post_upload(request: Request, file_id: str, release_date: str) -> dict:
        if not file_id.strip():
            raise BadRequest("file_id must be non-empty")
        released = parse_date(release_date, "release_date")
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            parts = [v for v in form.values() if isinstance(v, StarletteUploadFile)]
            if not parts:
                raise BadRequest("multipart body carries no file part")
            data = await parts[0].read()
        else:
            data = await request.body()
        if not data:
            raise BadRequest("empty upload body")
        return db.upload(file_id, released, data)

    @app.get("/uploads")
    def get_uploads() -> dict:
        return db.uploads()

    @app.get("/updates")
    def get_updates(status: Optional[str] = None, group: Optional[str] = None) -> dict:
        if status is not None and status not in VALID_STATUSES:
            raise BadRequest(f"status must be one of {', '.join(VALID_STATUSES)}")
        if group is not None and group != "week":
            raise BadRequest("group supports only 'week'")
        return db.updates(status, group_by_week=group == "week")

    @app.post("/updates/accept")
    def post_accept(body: DecisionRequest, request: Request) -> dict:
        return db.accept(body.ids, body.effective, request_now(request))

    @app.post("/updates/reject")
    def post_reject(body: DecisionRequest, request: Request) -> dict:
        return db.reject(body.ids, request_now(request))

    @app.get("/cells/{week}/{dimension}/{subcategory:path}/history")
    def get_history(week: str, dimension: str, subcategory: str) -> dict:
        return db.history(parse_cell(week, dimension, subcategory))

    @app.get("/snapshot")
    def get_snapshot(asof: str) -> dict:
        return db.snapshot(parse_date(asof, "asof"))

    @app.get("/provenance/first")
    def get_first(week: str, dimension: str, subcategory: str) -> dict:
        return db.first_value(parse_cell(week, dimension, subcategory))

    @app.get("/provenance/current")
    def get_current(
        request: Request, week: str, dimension: str, subcategory: str,
        asof: Optional[str] = None,
    ) -> dict:
        cell = parse_cell(week, dimension, subcategory)
        when = parse_date(asof, "asof") if asof else request_now(request).date()
        return db.current_value(cell, when)

    @app.get("/provenance/range")
    def get_range(week: str, dimension: str, subcategory: str) -> dict:
        return db.value_range(parse_cell(week, dimension, subcategory))

    @app.get("/provenance/rejected")
    def get_rejected(
        week: Optional[str] = None,
        dimension: Optional[str] = None,
        subcategory: Optional[str] = None,
    ) -> dict:
        try:
            predicate = CellPredicate(
                week=parse_date(week, "week") if week else None,
                dimension=parse_dimension(dimension) if dimension else None,
                subcategory=subcategory,
            )
        except ValueError as exc:
            raise BadRequest(str(exc))
        return db.rejected(predicate)

    def parse_dim(name: str):
        try:
            return parse_dimension(name)
        except ValueError as exc:
            raise BadRequest(str(exc))

    @app.get("/provenance/update-counts")
    def get_update_counts(
        request: Request, dimension: str, to: Optional[str] = None
    ) -> dict:
        # 'from' is a Python keyword, so read it off the raw query string.
        from_ = request.query_params.get("from")
        subcategories = request.query_params.getlist("subcategory") or None
        return db.update_counts(parse_dim(dimension), subcategories, _window(from_, to))

    @app.get("/provenance/most-updated")
    def get_most_updated(
        request: Request, dimension: str, to: Optional[str] = None
    ) -> dict:
        from_ = request.query_params.get("from")
        return db.most_updated(parse_dim(dimension), _window(from_, to))

    def _window(from_text: Optional[str], to_text: Optional[str]):
        try:
            return parse_window(from_text, to_text)
        except ValueError as exc:
            raise BadRequest(str(exc))

    @app.get("/provenance/correlation")
    def get_correlation(a_dim: str, a_sub: str, b_dim: str, b_sub: str) -> dict:
        return db.correlation((parse_dim(a_dim), a_sub), (parse_dim(b_dim), b_sub))

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def default_ui_dir() -> Optional[str]:
    """Locate the built web UI if it is present next to the package."""
    candidate = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    return str(candidate) if candidate.is_dir() else None


def serve(db_path: str, bind_address: str = "127.0.0.1", port: int = 8000,
          test_mode: bool = False) -> None:
    """Run the API until interrupted.  Raises OSError if the port is taken."""
    import uvicorn

    # Fail fast with a clean error instead of uvicorn's late bind failure.
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((bind_address, port))
    finally:
        probe.close()

    app = create_app(db_path, test_mode=test_mode, ui_dir=default_ui_dir())
    uvicorn.run(app, host=bind_address, port=port, log_level="warning")
