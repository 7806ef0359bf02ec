"""Pure projection of one stored document through a mapping."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any

from ..store import StoredRecord
from ..timeutil import parse_instant
from .mapping import ColumnSpec, MappingSpec

_SEGMENT_RE = re.compile(r"^([^.\[\]]+)((?:\[\d+\])*)$")
_INDEX_RE = re.compile(r"\[(\d+)\]")


@dataclass(frozen=True)
class Row:
    key: tuple[str, str]  # (install_guid, event_id)
    values: dict[str, Any]


@dataclass(frozen=True)
class Skip:
    pass


@dataclass(frozen=True)
class Quarantine:
    key: tuple[str, str]
    reason: str


def parse_path(path: str) -> list[tuple[str, tuple[int, ...]]]:
    """Split ``a.b[0].c`` into (key, indices) segments; raises ValueError."""
    segments = []
    for seg in path.split("."):
        m = _SEGMENT_RE.match(seg)
        if not m:
            raise ValueError(f"bad path segment {seg!r} in {path!r}")
        indices = tuple(int(i) for i in _INDEX_RE.findall(m.group(2)))
        segments.append((m.group(1), indices))
    return segments


def extract(tree: Any, path: str) -> tuple[bool, Any]:
    """(found, value) for a path over a document tree; absent paths are
    (False, None), and an explicit null counts as found."""
    node = tree
    for key, indices in parse_path(path):
        if not isinstance(node, dict) or key not in node:
            return False, None
        node = node[key]
        for i in indices:
            if not isinstance(node, list) or i >= len(node):
                return False, None
            node = node[i]
    return True, node


def coerce(value: Any, col_type: str) -> tuple[bool, Any]:
    """Apply the column coercion table: integers widen to reals, the strings
    "true"/"false" become booleans, ISO-8601 text becomes a timestamp;
    everything else is a type mismatch."""
    if col_type == "string":
        return (True, value) if isinstance(value, str) else (False, None)
    if col_type == "integer":
        ok = isinstance(value, int) and not isinstance(value, bool)
        return (True, value) if ok else (False, None)
    if col_type == "real":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False, None
        try:
            return True, float(value)
        except OverflowError:
            return False, None
    if col_type == "boolean":
        if isinstance(value, bool):
            return True, value
        if value == "true":
            return True, True
        if value == "false":
            return True, False
        return False, None
    if col_type == "timestamp":
        if isinstance(value, str):
            try:
                return True, parse_instant(value)
            except ValueError:
                return False, None
        return False, None
    raise ValueError(f"unknown column type {col_type!r}")


def _extract_column(tree: dict, col: ColumnSpec) -> tuple[Any, str | None]:
    """(value, problem).  A null or absent value is missing; a present value
    that will not coerce is a mismatch.  Optional columns fall back to null
    either way: only required columns generate problems."""
    found, value = extract(tree, col.path)
    if not found or value is None:
        if col.required:
            return None, f"{col.name}: missing required value at {col.path}"
        return None, None
    ok, coerced = coerce(value, col.type)
    if not ok:
        if col.required:
            return None, f"{col.name}: type mismatch at {col.path}: expected {col.type}"
        return None, None
    return coerced, None


def project(record: StoredRecord, mapping: MappingSpec) -> Row | Skip | Quarantine:
    """Project one record: Skip on event_type mismatch, Quarantine when a
    required column is missing or mismatched, else a keyed Row."""
    env = record.envelope
    if env.event_type != mapping.source_event_type:
        return Skip()
    tree = env.to_tree()
    key = env.record_id
    values: dict[str, Any] = {}
    problems: list[str] = []
    for col in mapping.columns:
        value, problem = _extract_column(tree, col)
        if problem is not None:
            problems.append(problem)
        else:
            values[col.name] = value
    if problems:
        return Quarantine(key=key, reason="; ".join(problems))
    return Row(key=key, values=values)
