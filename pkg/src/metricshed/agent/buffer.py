"""Durable local event buffer: a single append-only log plus a state index.

Log lines are JSON, one of three kinds:

    {"kind": "event", "created_at": ..., "envelope": {...}}
    {"kind": "submitted", "event_id": ..., "submitted_at": ...}
    {"kind": "error", "event_id": ..., "errors": [...]}

Replaying the file rebuilds the buffer, so agent restarts lose nothing.  A
torn final line is discarded.  State only ever moves pending -> submitted;
rejected events stay pending with the rejection attached.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any

from ..envelope import MetricEnvelope, Violation, validate_envelope
from ..timeutil import format_instant, parse_instant, utc_now_ms
from .filters import ReviewFilter

PENDING = "pending"
SUBMITTED = "submitted"

DEFAULT_CAP = 10_000


class BufferFullError(RuntimeError):
    """The pending backlog hit the configured cap; nothing was evicted."""


class DuplicateEventError(ValueError):
    def __init__(self, event_id: str):
        self.event_id = event_id
        super().__init__(f"event {event_id!r} already recorded")


@dataclass
class LocalEvent:
    envelope: MetricEnvelope
    state: str = PENDING
    created_at: datetime = field(default_factory=utc_now_ms)
    submitted_at: datetime | None = None
    last_error: list[Violation] | None = None

    @property
    def event_id(self) -> str:
        return self.envelope.event_id

    def to_tree(self) -> dict[str, Any]:
        return {
            "envelope": self.envelope.to_tree(),
            "state": self.state,
            "created_at": format_instant(self.created_at),
            "submitted_at": format_instant(self.submitted_at)
            if self.submitted_at
            else None,
            "last_error": [v.to_dict() for v in self.last_error]
            if self.last_error
            else None,
        }


class EventBuffer:
    """One buffer belongs to one agent process; operations are serialized."""

    def __init__(self, path: str | Path, cap: int = DEFAULT_CAP):
        self.path = Path(path)
        self.cap = cap
        self._lock = threading.RLock()
        self._events: dict[str, LocalEvent] = {}
        self._order: list[str] = []
        self._pending_count = 0
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._replay()
        self._fh = open(self.path, "a", encoding="utf-8")

    def _replay(self) -> None:
        if not self.path.exists():
            return
        data = self.path.read_text(encoding="utf-8")
        good_end = 0
        offset = 0
        while offset < len(data):
            nl = data.find("\n", offset)
            if nl == -1:
                break  # torn tail: the write never completed
            line = data[offset:nl]
            offset = nl + 1
            try:
                entry = json.loads(line)
            except ValueError as exc:
                raise ValueError(f"corrupt buffer {self.path}: {exc}") from exc
            good_end = offset
            kind = entry.get("kind")
            if kind == "event":
                env = validate_envelope(entry["envelope"])
                ev = LocalEvent(
                    envelope=env, created_at=parse_instant(entry["created_at"])
                )
                self._events[env.event_id] = ev
                self._order.append(env.event_id)
                self._pending_count += 1
            elif kind == "submitted":
                ev = self._events.get(entry["event_id"])
                if ev is not None and ev.state == PENDING:
                    ev.state = SUBMITTED
                    ev.submitted_at = parse_instant(entry["submitted_at"])
                    ev.last_error = None
                    self._pending_count -= 1
            elif kind == "error":
                ev = self._events.get(entry["event_id"])
                if ev is not None:
                    ev.last_error = [Violation.from_dict(v) for v in entry["errors"]]
        if good_end != len(data):
            with open(self.path, "r+", encoding="utf-8") as fh:
                fh.truncate(good_end)

    def _write(self, entry: dict[str, Any]) -> None:
        self._fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")
        self._fh.flush()

    # -- recording -----------------------------------------------------------

    def record(
        self, envelope: MetricEnvelope, created_at: datetime | None = None
    ) -> LocalEvent:
        """Persist an event in pending state.

        Fails loudly when the pending cap is reached (no silent eviction) and
        rejects event_ids the buffer has already seen.
        """
        with self._lock:
            if envelope.event_id in self._events:
                raise DuplicateEventError(envelope.event_id)
            if self._pending_count >= self.cap:
                raise BufferFullError(f"{self._pending_count} pending events at cap")
            ev = LocalEvent(
                envelope=envelope, created_at=created_at or utc_now_ms()
            )
            self._write(
                {
                    "kind": "event",
                    "created_at": format_instant(ev.created_at),
                    "envelope": envelope.to_tree(),
                }
            )
            self._events[envelope.event_id] = ev
            self._order.append(envelope.event_id)
            self._pending_count += 1
            return ev

    # -- review ----------------------------------------------------------------

    def list_events(self, flt: ReviewFilter | None = None) -> list[LocalEvent]:
        """Events in recorded order matching the filter (empty filter: all)."""
        flt = flt or ReviewFilter()
        with self._lock:
            out = []
            for eid in self._order:
                ev = self._events[eid]
                if flt.matches(ev):
                    out.append(ev)
            return out

    def get(self, event_id: str) -> LocalEvent | None:
        with self._lock:
            return self._events.get(event_id)

    def pending_ids(self) -> list[str]:
        with self._lock:
            return [
                eid for eid in self._order if self._events[eid].state == PENDING
            ]

    def counts(self) -> dict[str, int]:
        with self._lock:
            return {
                PENDING: self._pending_count,
                SUBMITTED: len(self._events) - self._pending_count,
            }

    # -- state transitions -------------------------------------------------------

    def mark_submitted(
        self, event_ids: list[str], submitted_at: datetime | None = None
    ) -> None:
        submitted_at = submitted_at or utc_now_ms()
        with self._lock:
            for eid in event_ids:
                ev = self._events[eid]
                if ev.state == SUBMITTED:
                    continue
                self._write(
                    {
                        "kind": "submitted",
                        "event_id": eid,
                        "submitted_at": format_instant(submitted_at),
                    }
                )
                ev.state = SUBMITTED
                ev.submitted_at = submitted_at
                ev.last_error = None
                self._pending_count -= 1

    def attach_error(self, event_id: str, errors: list[Violation]) -> None:
        with self._lock:
            ev = self._events[event_id]
            self._write(
                {
                    "kind": "error",
                    "event_id": event_id,
                    "errors": [v.to_dict() for v in errors],
                }
            )
            ev.last_error = list(errors)

    def close(self) -> None:
        with self._lock:
            self._fh.close()

    def __enter__(self) -> "EventBuffer":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
