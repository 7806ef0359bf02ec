"""Collector service: the push channel for agents and the identical pull
channel for readers (unifiers, exporters, dashboards).

Two credential classes exist.  Agent credentials are issued at registration
and may only write events carrying their own install_guid; the reader key is
deployment-wide and may pull anything.  Batches are validated per element:
one malformed element never affects the rest, and the receipt accounts for
every element exactly once.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any

from . import __version__
from .envelope import (
    ErrorKind,
    MetricEnvelope,
    ValidationError,
    Violation,
    code_name_violations,
    validate_envelope,
)
from .store import ScanFilter, Store, StoredRecord
from .timeutil import format_instant, parse_instant, utc_now_ms

MAX_BATCH = 1000


class AuthError(Exception):
    """Credentials missing or not recognized; the whole request is refused."""


class BatchTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class Registration:
    code_name: str
    full_name: str
    secret_key: str
    install_guid: str
    created_at: datetime

    def to_tree(self) -> dict[str, str]:
        return {
            "code_name": self.code_name,
            "full_name": self.full_name,
            "secret_key": self.secret_key,
            "install_guid": self.install_guid,
            "created_at": format_instant(self.created_at),
        }

    def __repr__(self) -> str:  # secrets stay out of logs
        return f"Registration(code_name={self.code_name!r}, install_guid={self.install_guid!r})"


@dataclass
class RejectedItem:
    index: int
    errors: list[Violation]

    def to_tree(self) -> dict[str, Any]:
        return {"index": self.index, "errors": [v.to_dict() for v in self.errors]}


@dataclass
class SubmitReceipt:
    accepted: int = 0
    duplicates: int = 0
    rejected: list[RejectedItem] = field(default_factory=list)

    @property
    def total(self) -> int:
        return self.accepted + self.duplicates + len(self.rejected)

    def to_tree(self) -> dict[str, Any]:
        return {
            "accepted": self.accepted,
            "duplicates": self.duplicates,
            "rejected": [r.to_tree() for r in self.rejected],
        }

    @classmethod
    def from_tree(cls, tree: dict[str, Any]) -> "SubmitReceipt":
        return cls(
            accepted=int(tree["accepted"]),
            duplicates=int(tree["duplicates"]),
            rejected=[
                RejectedItem(
                    index=int(r["index"]),
                    errors=[Violation.from_dict(v) for v in r["errors"]],
                )
                for r in tree["rejected"]
            ],
        )


class RegistrationStore:
    """Issued credentials, persisted as an append-only JSONL file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._by_pair: dict[tuple[str, str], Registration] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line:
                    continue
                tree = json.loads(line)
                reg = Registration(
                    code_name=tree["code_name"],
                    full_name=tree["full_name"],
                    secret_key=tree["secret_key"],
                    install_guid=tree["install_guid"],
                    created_at=parse_instant(tree["created_at"]),
                )
                self._by_pair[(reg.secret_key, reg.install_guid)] = reg

    def register(self, code_name: str, full_name: str) -> Registration:
        reg = Registration(
            code_name=code_name,
            full_name=full_name,
            secret_key=str(uuid.uuid4()),
            install_guid=str(uuid.uuid4()),
            created_at=utc_now_ms(),
        )
        with self._lock:
            self._by_pair[(reg.secret_key, reg.install_guid)] = reg
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(reg.to_tree(), sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        return reg

    def verify(self, secret_key: str, install_guid: str) -> bool:
        return (secret_key, install_guid) in self._by_pair


class CollectorService:
    """Application-level collector; the HTTP layer is a thin shell over this."""

    def __init__(self, store: Store, registrations: RegistrationStore, reader_key: str):
        self.store = store
        self.registrations = registrations
        self.reader_key = reader_key
        self.started_at = time.monotonic()

    # -- registration -------------------------------------------------------

    def register_agent(self, code_name: str, full_name: str) -> Registration:
        """Issue a fresh credential pair; the same code_name may register
        many times (one pair per installation)."""
        violations = code_name_violations(code_name)
        if not isinstance(full_name, str):
            violations.append(
                Violation(ErrorKind.BAD_VALUE, "full_name", "must be a string")
            )
        if violations:
            raise ValidationError(violations)
        return self.registrations.register(code_name, full_name)

    # -- write path -----------------------------------------------------------

    def submit_events(
        self, secret_key: str, install_guid: str, batch: list[Any]
    ) -> SubmitReceipt:
        if not self.registrations.verify(secret_key, install_guid):
            raise AuthError("unknown agent credentials")
        if not isinstance(batch, list) or not batch:
            raise ValueError("batch must be a non-empty array of documents")
        if len(batch) > MAX_BATCH:
            raise BatchTooLargeError(f"batch of {len(batch)} exceeds {MAX_BATCH}")
        receipt = SubmitReceipt()
        received_at = utc_now_ms()
        to_append: list[tuple[int, MetricEnvelope]] = []
        for i, raw in enumerate(batch):
            try:
                env = validate_envelope(raw)
            except ValidationError as exc:
                receipt.rejected.append(RejectedItem(index=i, errors=exc.violations))
                continue
            if env.agent.secret_key != secret_key or env.agent.install_guid != install_guid:
                receipt.rejected.append(
                    RejectedItem(
                        index=i,
                        errors=[
                            Violation(
                                ErrorKind.CREDENTIAL_MISMATCH,
                                "agent",
                                "envelope credentials do not match the channel",
                            )
                        ],
                    )
                )
                continue
            to_append.append((i, env))
        results = self.store.append_many([env for _, env in to_append], received_at)
        for (_, _env), (_rec, fresh) in zip(to_append, results):
            if fresh:
                receipt.accepted += 1
            else:
                receipt.duplicates += 1
        assert receipt.total == len(batch)
        return receipt

    # -- read path ---------------------------------------------------------

    def check_reader(self, reader_key: str) -> None:
        if reader_key != self.reader_key:
            raise AuthError("unknown reader credential")

    def pull_events(
        self,
        reader_key: str,
        cursor: str = "",
        limit: int = 100,
        flt: ScanFilter | None = None,
    ) -> tuple[list[StoredRecord], str]:
        self.check_reader(reader_key)
        return self.store.scan(cursor, limit, flt)

    def stats(self, reader_key: str) -> dict[str, Any]:
        self.check_reader(reader_key)
        return {
            "partitions": [
                {**key.to_tree(), **st.to_tree()}
                for key, st in self.store.stats().items()
            ],
            "record_count": self.store.record_count,
        }

    def health(self) -> dict[str, Any]:
        return {
            "version": __version__,
            "partition_count": self.store.partition_count,
            "uptime_s": round(time.monotonic() - self.started_at, 3),
        }
