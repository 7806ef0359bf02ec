"""Local HTTP endpoint for reviewing and submitting buffered events.

This is what the review UI talks to:

    GET  /local/events?keyword&application&from&to&state
    POST /local/submit        {"ids": [...]}
    GET  /local/status
    POST /local/collection    {"collecting": true|false}

The collection toggle controls the embedded demo collector (when enabled)
and is reported in status either way, so the UI can always render the
start/stop control.
"""

from __future__ import annotations

import threading
import time

from fastapi import Body, FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from ..envelope import AgentDescriptor
from ..timeutil import parse_instant, utc_now_ms
from .buffer import BufferFullError, DuplicateEventError, EventBuffer
from .filters import ReviewFilter
from .submit import submit_selected
from .synthetic import synthetic_events
from .transport import TransportError


class DemoCollector:
    """Background thread recording synthetic events while collection is on."""

    def __init__(self, buffer: EventBuffer, agent: AgentDescriptor, rate: float):
        self.buffer = buffer
        self.agent = agent
        self.interval = 1.0 / rate
        self.collecting = threading.Event()
        self._stop = threading.Event()
        self._counter = 0
        self._thread = threading.Thread(target=self._run, daemon=True)
        self._thread.start()

    def _run(self) -> None:
        seed = int(time.time())
        while not self._stop.is_set():
            if not self.collecting.is_set():
                time.sleep(0.05)
                continue
            batch = synthetic_events(
                [self.agent], rate=1, duration=1, seed=seed,
                base_time=utc_now_ms(), id_prefix=f"demo-{seed}-{self._counter}",
            )
            self._counter += 1
            try:
                self.buffer.record(batch[0].envelope)
            except (BufferFullError, DuplicateEventError):
                pass
            time.sleep(self.interval)

    def stop(self) -> None:
        self._stop.set()


def build_agent_app(
    buffer: EventBuffer,
    transport,
    demo: DemoCollector | None = None,
) -> FastAPI:
    app = FastAPI(title="metricshed agent", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    state = {"collecting": demo.collecting.is_set() if demo else False}

    @app.exception_handler(ValueError)
    async def _value(request: Request, exc: ValueError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(LookupError)
    async def _lookup(request: Request, exc: LookupError):
        return JSONResponse(status_code=400, content={"error": str(exc)})

    @app.exception_handler(TransportError)
    async def _transport(request: Request, exc: TransportError):
        return JSONResponse(status_code=502, content={"error": str(exc)})

    @app.get("/local/events")
    def events(
        keyword: str | None = Query(default=None),
        application: str | None = Query(default=None),
        from_: str | None = Query(default=None, alias="from"),
        to: str | None = Query(default=None),
        state_q: str | None = Query(default=None, alias="state"),
    ) -> dict:
        flt = ReviewFilter(
            keyword=keyword or None,
            application=application or None,
            ts_from=parse_instant(from_) if from_ else None,
            ts_to=parse_instant(to) if to else None,
            state=state_q or None,
        )
        return {"events": [ev.to_tree() for ev in buffer.list_events(flt)]}

    @app.post("/local/submit")
    def submit(payload: dict = Body(...)) -> dict:
        ids = payload.get("ids") or []
        if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids):
            raise ValueError("ids must be a list of event ids")
        if not ids:
            raise ValueError("nothing selected")
        receipt = submit_selected(buffer, ids, transport)
        return receipt.to_tree()

    @app.get("/local/status")
    def status() -> dict:
        return {"collecting": state["collecting"], **buffer.counts()}

    @app.post("/local/collection")
    def collection(payload: dict = Body(...)) -> dict:
        state["collecting"] = bool(payload.get("collecting"))
        if demo is not None:
            if state["collecting"]:
                demo.collecting.set()
            else:
                demo.collecting.clear()
        return {"collecting": state["collecting"], **buffer.counts()}

    return app
