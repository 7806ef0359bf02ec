"""The three-part event document every agent, the store, and unifiers share.

An envelope has exactly three top-level fields: a client-clock ``timestamp``,
an ``agent`` descriptor identifying who collected the event, and a free-form
``metrics`` tree carrying the measurement itself.  The metadata shape is
fixed across agents; inside ``metrics`` only two keys are reserved
(``event_id`` and ``event_type``), everything else is agent-defined.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Any

from .timeutil import format_instant, parse_instant

MAX_CODE_NAME_LEN = 64
MAX_PAYLOAD_BYTES = 1 << 20  # serialized metrics tree
MAX_TREE_DEPTH = 32

TOP_LEVEL_FIELDS = ("timestamp", "agent", "metrics")
AGENT_FIELDS = ("code_name", "full_name", "secret_key", "install_guid")

_UUID_RE = re.compile(
    r"^[0-9a-fA-F]{8}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{4}-[0-9a-fA-F]{12}$"
)
_EVENT_TYPE_RE = re.compile(r"^[a-z0-9][a-z0-9._-]*$")


class ErrorKind(str, Enum):
    """Machine-readable classes of envelope rejection."""

    MISSING_FIELD = "missing_field"
    BAD_TIMESTAMP = "bad_timestamp"
    BAD_UUID = "bad_uuid"
    PAYLOAD_TOO_LARGE = "payload_too_large"
    MISSING_RESERVED_KEY = "missing_reserved_key"
    UNKNOWN_TOP_LEVEL_FIELD = "unknown_top_level_field"
    BAD_VALUE = "bad_value"
    # Per-element rejection used by the collector when the envelope's embedded
    # agent credentials do not match the authenticated channel.
    CREDENTIAL_MISMATCH = "credential_mismatch"


@dataclass(frozen=True)
class Violation:
    kind: ErrorKind
    path: str
    message: str = ""

    def to_dict(self) -> dict[str, str]:
        return {"kind": self.kind.value, "path": self.path, "message": self.message}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Violation":
        return cls(ErrorKind(d["kind"]), d.get("path", ""), d.get("message", ""))


class ValidationError(ValueError):
    """Raised when a document violates the envelope contract.

    Carries every violated rule, not just the first one found.
    """

    def __init__(self, violations: list[Violation]):
        self.violations = list(violations)
        super().__init__("; ".join(f"{v.kind.value}({v.path})" for v in violations))

    def kinds(self) -> set[ErrorKind]:
        return {v.kind for v in self.violations}

    def to_list(self) -> list[dict[str, str]]:
        return [v.to_dict() for v in self.violations]


@dataclass(frozen=True)
class AgentDescriptor:
    """Identity of the program that collected an event."""

    code_name: str
    full_name: str
    secret_key: str
    install_guid: str

    def to_tree(self) -> dict[str, str]:
        return {
            "code_name": self.code_name,
            "full_name": self.full_name,
            "secret_key": self.secret_key,
            "install_guid": self.install_guid,
        }

    def __repr__(self) -> str:  # keep credentials out of logs and tracebacks
        return (
            f"AgentDescriptor(code_name={self.code_name!r}, "
            f"full_name={self.full_name!r}, secret_key='***', "
            f"install_guid={self.install_guid!r})"
        )


@dataclass(frozen=True)
class MetricEnvelope:
    """A validated event document.

    ``metrics`` is the validated document tree; treat it as immutable.
    """

    timestamp: datetime
    agent: AgentDescriptor
    metrics: dict[str, Any]

    @property
    def event_id(self) -> str:
        return self.metrics["event_id"]

    @property
    def event_type(self) -> str:
        return self.metrics["event_type"]

    @property
    def install_guid(self) -> str:
        return self.agent.install_guid

    @property
    def record_id(self) -> tuple[str, str]:
        """Store-wide dedup key."""
        return (self.agent.install_guid, self.event_id)

    def to_tree(self) -> dict[str, Any]:
        return {
            "timestamp": format_instant(self.timestamp),
            "agent": self.agent.to_tree(),
            "metrics": self.metrics,
        }


def _is_control_free(s: str) -> bool:
    return not any(ord(ch) < 0x20 or ord(ch) == 0x7F for ch in s)


def code_name_violations(code_name: Any, path: str = "code_name") -> list[Violation]:
    """Field rules for agent code names, shared with agent registration."""
    if not isinstance(code_name, str):
        return [Violation(ErrorKind.BAD_VALUE, path, "must be a string")]
    if not code_name:
        return [Violation(ErrorKind.BAD_VALUE, path, "empty")]
    if len(code_name) > MAX_CODE_NAME_LEN:
        return [
            Violation(
                ErrorKind.BAD_VALUE, path, f"longer than {MAX_CODE_NAME_LEN} characters"
            )
        ]
    if not _is_control_free(code_name):
        return [Violation(ErrorKind.BAD_VALUE, path, "control character")]
    return []


def _check_tree(value: Any, path: str, depth: int, out: list[Violation]) -> None:
    """Walk a metrics subtree, checking value types and depth."""
    if depth > MAX_TREE_DEPTH:
        out.append(
            Violation(
                ErrorKind.PAYLOAD_TOO_LARGE,
                path,
                f"tree deeper than {MAX_TREE_DEPTH} levels",
            )
        )
        return
    if value is None or isinstance(value, (str, bool, int)):
        return
    if isinstance(value, float):
        if not math.isfinite(value):
            out.append(Violation(ErrorKind.BAD_VALUE, path, "non-finite number"))
        return
    if isinstance(value, list):
        for i, item in enumerate(value):
            _check_tree(item, f"{path}[{i}]", depth + 1, out)
        return
    if isinstance(value, dict):
        for key, item in value.items():
            if not isinstance(key, str):
                out.append(
                    Violation(ErrorKind.BAD_VALUE, path, f"non-string key {key!r}")
                )
                continue
            _check_tree(item, f"{path}.{key}", depth + 1, out)
        return
    out.append(
        Violation(
            ErrorKind.BAD_VALUE, path, f"unsupported value type {type(value).__name__}"
        )
    )


def _validate_agent(raw: Any, out: list[Violation]) -> AgentDescriptor | None:
    if not isinstance(raw, dict):
        out.append(Violation(ErrorKind.BAD_VALUE, "agent", "must be an object"))
        return None
    for key in raw:
        if key not in AGENT_FIELDS:
            out.append(
                Violation(ErrorKind.BAD_VALUE, f"agent.{key}", "unexpected field")
            )
    fields: dict[str, str] = {}
    for name in AGENT_FIELDS:
        if name not in raw:
            out.append(Violation(ErrorKind.MISSING_FIELD, f"agent.{name}"))
            continue
        value = raw[name]
        if not isinstance(value, str):
            kind = ErrorKind.BAD_UUID if name in ("secret_key", "install_guid") else ErrorKind.BAD_VALUE
            out.append(Violation(kind, f"agent.{name}", "must be a string"))
            continue
        fields[name] = value

    code_name = fields.get("code_name")
    if code_name is not None:
        out.extend(code_name_violations(code_name, "agent.code_name"))
    for name in ("secret_key", "install_guid"):
        value = fields.get(name)
        if value is not None and not _UUID_RE.match(value):
            out.append(Violation(ErrorKind.BAD_UUID, f"agent.{name}"))

    if all(name in fields for name in AGENT_FIELDS):
        return AgentDescriptor(
            code_name=fields["code_name"],
            full_name=fields["full_name"],
            secret_key=fields["secret_key"].lower(),
            install_guid=fields["install_guid"].lower(),
        )
    return None


def _validate_metrics(raw: Any, out: list[Violation]) -> dict[str, Any] | None:
    if not isinstance(raw, dict):
        out.append(Violation(ErrorKind.BAD_VALUE, "metrics", "must be an object"))
        return None

    before = len(out)
    _check_tree(raw, "metrics", 1, out)
    tree_clean = len(out) == before

    event_id = raw.get("event_id")
    if event_id is None or (isinstance(event_id, str) and not event_id):
        out.append(Violation(ErrorKind.MISSING_RESERVED_KEY, "event_id"))
    elif not isinstance(event_id, str):
        out.append(
            Violation(ErrorKind.BAD_VALUE, "metrics.event_id", "must be a string")
        )

    event_type = raw.get("event_type")
    if event_type is None or (isinstance(event_type, str) and not event_type):
        out.append(Violation(ErrorKind.MISSING_RESERVED_KEY, "event_type"))
    elif not isinstance(event_type, str):
        out.append(
            Violation(ErrorKind.BAD_VALUE, "metrics.event_type", "must be a string")
        )
    elif not _EVENT_TYPE_RE.match(event_type):
        out.append(
            Violation(
                ErrorKind.BAD_VALUE,
                "metrics.event_type",
                "must be a lowercase token",
            )
        )

    # Size is measured on the canonical serialization; only meaningful once
    # the tree holds serializable values.
    if tree_clean:
        size = len(canonical_json(raw).encode("utf-8"))
        if size > MAX_PAYLOAD_BYTES:
            out.append(
                Violation(
                    ErrorKind.PAYLOAD_TOO_LARGE,
                    "metrics",
                    f"{size} bytes exceeds {MAX_PAYLOAD_BYTES}",
                )
            )
    return raw


def validate_envelope(raw: Any) -> MetricEnvelope:
    """Validate a parsed document tree as a MetricEnvelope.

    Total: any input yields either a typed envelope or a ValidationError
    listing every violated rule.  Normalizes on the way in: timestamps are
    truncated to millisecond precision and UUIDs lowercased.
    """
    violations: list[Violation] = []
    if not isinstance(raw, dict):
        raise ValidationError(
            [Violation(ErrorKind.BAD_VALUE, "", "document must be an object")]
        )

    for name in raw:
        if name not in TOP_LEVEL_FIELDS:
            violations.append(Violation(ErrorKind.UNKNOWN_TOP_LEVEL_FIELD, str(name)))
    for name in TOP_LEVEL_FIELDS:
        if name not in raw:
            violations.append(Violation(ErrorKind.MISSING_FIELD, name))

    timestamp: datetime | None = None
    if "timestamp" in raw:
        try:
            timestamp = parse_instant(raw["timestamp"])
        except ValueError as exc:
            violations.append(Violation(ErrorKind.BAD_TIMESTAMP, "timestamp", str(exc)))

    agent = _validate_agent(raw["agent"], violations) if "agent" in raw else None
    metrics = _validate_metrics(raw["metrics"], violations) if "metrics" in raw else None

    if violations:
        raise ValidationError(violations)
    assert timestamp is not None and agent is not None and metrics is not None
    return MetricEnvelope(timestamp=timestamp, agent=agent, metrics=metrics)


def canonical_json(tree: Any) -> str:
    """Canonical text form: keys sorted by code point, no insignificant
    whitespace, numbers in shortest round-trip form, UTF-8 unescaped."""
    return json.dumps(
        tree, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False
    )


def canonical_bytes(envelope: MetricEnvelope) -> bytes:
    """Deterministic serialization; equal envelopes produce identical bytes."""
    return canonical_json(envelope.to_tree()).encode("utf-8")


def parse_envelope_bytes(data: bytes) -> MetricEnvelope:
    """Inverse of canonical_bytes (accepts any JSON encoding of an envelope)."""
    return validate_envelope(json.loads(data.decode("utf-8")))


def make_envelope(
    agent: AgentDescriptor,
    timestamp: datetime,
    event_id: str,
    event_type: str,
    metrics: dict[str, Any] | None = None,
) -> MetricEnvelope:
    """Build and validate an envelope from parts (used by agents)."""
    tree = {
        "timestamp": format_instant(timestamp),
        "agent": agent.to_tree(),
        "metrics": {"event_id": event_id, "event_type": event_type, **(metrics or {})},
    }
    return validate_envelope(tree)
