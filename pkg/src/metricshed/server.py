"""HTTP surface of the collector.

Routes (UTF-8 JSON bodies, HTTP/1.1):

    POST /api/v1/agents/register            {code_name, full_name}
    POST /api/v1/events:batch               JSON array of envelope documents
    GET  /api/v1/events                     ?cursor&limit&install_guid&event_type&from&to
    GET  /api/v1/health
    GET  /api/v1/stats
    GET  /api/v1/analytics/over-time        ?from&to&event_type&install_guid
    GET  /api/v1/analytics/breakdown        ?dimension&from&to
    /ui  static single-page app (when built)

Authentication is header-based: agents send X-Secret-Key + X-Install-Guid,
readers send their deployment key in X-Secret-Key.  Status mapping: 200 with
a receipt even when elements were rejected, 400 for malformed requests or
cursors, 401 for credential failure, 413 for oversize batches.
"""

from __future__ import annotations

import json
from datetime import datetime
from pathlib import Path

from fastapi import Body, FastAPI, Header, Query, Request
from fastapi.concurrency import run_in_threadpool
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .analytics import BadRangeError, breakdown, events_over_time
from .collector import AuthError, BatchTooLargeError, CollectorService
from .envelope import ValidationError
from .store import CursorError, ScanFilter, StorageFullError
from .timeutil import parse_instant


def _parse_optional_instant(name: str, value: str | None) -> datetime | None:
    if value is None or value == "":
        return None
    try:
        return parse_instant(value)
    except ValueError as exc:
        raise BadRangeError(f"bad {name!r} instant: {exc}") from exc


def build_app(service: CollectorService, ui_dir: str | Path | None = None) -> FastAPI:
    app = FastAPI(title="metricshed collector", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(AuthError)
    async def _auth_error(request: Request, exc: AuthError):
        return JSONResponse(status_code=401, content={"error": str(exc)})

    @app.exception_handler(BatchTooLargeError)
    async def _too_large(request: Request, exc: BatchTooLargeError):
        return JSONResponse(status_code=413, content={"error": str(exc)})

    @app.exception_handler(ValidationError)
    async def _validation(request: Request, exc: ValidationError):
        return JSONResponse(status_code=400, content={"errors": exc.to_list()})

    @app.exception_handler(CursorError)
    async def _cursor(request: Request, exc: CursorError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(BadRangeError)
    async def _range(request: Request, exc: BadRangeError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(ValueError)
    async def _value(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(StorageFullError)
    async def _full(request: Request, exc: StorageFullError):
        return JSONResponse(status_code=507, content={"error": str(exc)})

    @app.post("/api/v1/agents/register")
    def register(payload: dict = Body(...)) -> dict:
        reg = service.register_agent(
            payload.get("code_name"), payload.get("full_name")
        )
        return reg.to_tree()

    @app.post("/api/v1/events:batch")
    async def submit(request: Request) -> dict:
        # hot path: skip model parsing, read the array straight off the wire
        secret_key = request.headers.get("x-secret-key", "")
        install_guid = request.headers.get("x-install-guid", "")
        if not secret_key or not install_guid:
            raise AuthError("missing X-Secret-Key / X-Install-Guid headers")
        raw = await request.body()
        try:
            batch = json.loads(raw)
        except ValueError as exc:
            raise ValueError(f"body is not valid JSON: {exc}") from exc
        receipt = await run_in_threadpool(
            service.submit_events, secret_key, install_guid, batch
        )
        return receipt.to_tree()

    @app.get("/api/v1/events")
    def pull(
        cursor: str = Query(default=""),
        limit: int = Query(default=100),
        install_guid: str | None = Query(default=None),
        event_type: str | None = Query(default=None),
        from_: str | None = Query(default=None, alias="from"),
        to: str | None = Query(default=None),
        x_secret_key: str = Header(default=""),
    ) -> dict:
        flt = ScanFilter(
            install_guid=install_guid or None,
            event_type=event_type or None,
            ts_from=_parse_optional_instant("from", from_),
            ts_to=_parse_optional_instant("to", to),
        )
        records, next_cursor = service.pull_events(x_secret_key, cursor, limit, flt)
        return {
            "records": [r.to_tree() for r in records],
            "next_cursor": next_cursor,
        }

    @app.get("/api/v1/health")
    def health() -> dict:
        return service.health()

    @app.get("/api/v1/stats")
    def stats(x_secret_key: str = Header(default="")) -> dict:
        return service.stats(x_secret_key)

    @app.get("/api/v1/analytics/over-time")
    def over_time(
        from_: str | None = Query(default=None, alias="from"),
        to: str | None = Query(default=None),
        event_type: str | None = Query(default=None),
        install_guid: str | None = Query(default=None),
        x_secret_key: str = Header(default=""),
    ) -> dict:
        service.check_reader(x_secret_key)
        series = events_over_time(
            service.store,
            _parse_optional_instant("from", from_),
            _parse_optional_instant("to", to),
            install_guid=install_guid or None,
            event_type=event_type or None,
        )
        return series.to_tree()

    @app.get("/api/v1/analytics/breakdown")
    def breakdown_route(
        dimension: str = Query(...),
        from_: str | None = Query(default=None, alias="from"),
        to: str | None = Query(default=None),
        x_secret_key: str = Header(default=""),
    ) -> dict:
        service.check_reader(x_secret_key)
        series = breakdown(
            service.store,
            dimension,
            _parse_optional_instant("from", from_),
            _parse_optional_instant("to", to),
        )
        return series.to_tree()

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
