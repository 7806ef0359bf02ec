"""Relational sink interface and the embedded file-backed implementation.

A sink holds tables keyed by (install_guid, event_id).  The embedded
implementation keeps one JSON file per table under ``<root>/tables`` and one
checkpoint file per mapping under ``<root>/checkpoints``; every commit
rewrites the file atomically (temp file, fsync, rename), and checkpoints are
only written after the rows they cover, so a crash can at worst replay work
that idempotent upserts absorb.

Each mapped table has a quarantine side table named ``<table>__quarantine``
holding (reason, ref) per document the mapping could not project.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Protocol

from ..timeutil import format_instant, parse_instant
from .mapping import ColumnSpec, MappingSpec
from .project import Row

QUARANTINE_SUFFIX = "__quarantine"

QUARANTINE_COLUMNS = (
    ColumnSpec(name="reason", path="_quarantine.reason", type="string", required=True),
    ColumnSpec(name="ref", path="_quarantine.ref", type="string", required=True),
)


class SchemaConflictError(RuntimeError):
    """create_table for an existing table with a different spec."""


class SinkUnavailableError(RuntimeError):
    """The sink could not be reached or written."""


class UnknownTableError(LookupError):
    pass


@dataclass(frozen=True)
class UnifyCheckpoint:
    mapping_id: str
    cursor: str
    rows_emitted: int = 0
    quarantined: int = 0

    def to_tree(self) -> dict[str, Any]:
        return {
            "mapping_id": self.mapping_id,
            "cursor": self.cursor,
            "rows_emitted": self.rows_emitted,
            "quarantined": self.quarantined,
        }

    @classmethod
    def from_tree(cls, tree: dict[str, Any]) -> "UnifyCheckpoint":
        return cls(
            mapping_id=tree["mapping_id"],
            cursor=tree["cursor"],
            rows_emitted=int(tree["rows_emitted"]),
            quarantined=int(tree["quarantined"]),
        )


class Sink(Protocol):
    def create_table(self, spec: MappingSpec) -> None: ...

    def upsert_rows(self, table: str, rows: Iterable[Row]) -> None: ...

    def read_table(self, table: str) -> list[Row]: ...

    def table_columns(self, table: str) -> tuple[ColumnSpec, ...]: ...

    def load_checkpoint(self, mapping_id: str) -> UnifyCheckpoint | None: ...

    def save_checkpoint(self, checkpoint: UnifyCheckpoint) -> None: ...


def _encode_value(value: Any, col_type: str) -> Any:
    if value is None:
        return None
    if col_type == "timestamp":
        return format_instant(value)
    return value


def _decode_value(value: Any, col_type: str) -> Any:
    if value is None:
        return None
    if col_type == "timestamp":
        return parse_instant(value)
    return value


@dataclass
class _Table:
    columns: tuple[ColumnSpec, ...]
    source_event_type: str
    rows: dict[tuple[str, str], dict[str, Any]]


class FileSink:
    """Embedded sink storing each table as one atomically-rewritten file."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "tables").mkdir(parents=True, exist_ok=True)
        (self.root / "checkpoints").mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._tables: dict[str, _Table] = {}
        self._load()

    # -- persistence -------------------------------------------------------

    def _table_path(self, table: str) -> Path:
        return self.root / "tables" / f"{table}.json"

    def _load(self) -> None:
        for path in sorted((self.root / "tables").glob("*.json")):
            try:
                tree = json.loads(path.read_text(encoding="utf-8"))
                columns = tuple(ColumnSpec.from_tree(c) for c in tree["columns"])
                rows: dict[tuple[str, str], dict[str, Any]] = {}
                for guid, event_id, values in tree["rows"]:
                    rows[(guid, event_id)] = {
                        c.name: _decode_value(values.get(c.name), c.type) for c in columns
                    }
                self._tables[path.stem] = _Table(
                    columns=columns,
                    source_event_type=tree.get("source_event_type", ""),
                    rows=rows,
                )
            except (ValueError, KeyError, TypeError) as exc:
                raise SinkUnavailableError(f"corrupt table file {path}: {exc}") from exc

    def _write_atomic(self, path: Path, payload: dict[str, Any]) -> None:
        tmp = path.with_suffix(".tmp")
        try:
            with open(tmp, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, ensure_ascii=False, sort_keys=True)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, path)
        except OSError as exc:
            raise SinkUnavailableError(str(exc)) from exc

    def _persist_table(self, name: str) -> None:
        table = self._tables[name]
        rows = [
            [guid, event_id, {c.name: _encode_value(values.get(c.name), c.type) for c in table.columns}]
            for (guid, event_id), values in sorted(table.rows.items())
        ]
        self._write_atomic(
            self._table_path(name),
            {
                "columns": [c.to_tree() for c in table.columns],
                "source_event_type": table.source_event_type,
                "rows": rows,
            },
        )

    # -- sink interface ------------------------------------------------------

    def create_table(self, spec: MappingSpec) -> None:
        """Idempotent for an identical spec; conflicting specs are refused."""
        spec.validate()
        with self._lock:
            existing = self._tables.get(spec.table)
            if existing is not None:
                if (
                    existing.columns != spec.columns
                    or existing.source_event_type != spec.source_event_type
                ):
                    raise SchemaConflictError(
                        f"table {spec.table!r} already exists with a different spec"
                    )
                return
            self._tables[spec.table] = _Table(
                columns=spec.columns,
                source_event_type=spec.source_event_type,
                rows={},
            )
            self._tables[spec.table + QUARANTINE_SUFFIX] = _Table(
                columns=QUARANTINE_COLUMNS,
                source_event_type=spec.source_event_type,
                rows={},
            )
            self._persist_table(spec.table)
            self._persist_table(spec.table + QUARANTINE_SUFFIX)

    def upsert_rows(self, table: str, rows: Iterable[Row]) -> None:
        """Keyed upsert; the last write for a key wins."""
        rows = list(rows)
        with self._lock:
            if table not in self._tables:
                raise UnknownTableError(table)
            target = self._tables[table]
            for row in rows:
                target.rows[row.key] = dict(row.values)
            if rows:
                self._persist_table(table)

    def read_table(self, table: str) -> list[Row]:
        with self._lock:
            if table not in self._tables:
                raise UnknownTableError(table)
            target = self._tables[table]
            return [
                Row(key=key, values=dict(values))
                for key, values in sorted(target.rows.items())
            ]

    def table_columns(self, table: str) -> tuple[ColumnSpec, ...]:
        with self._lock:
            if table not in self._tables:
                raise UnknownTableError(table)
            return self._tables[table].columns

    def table_names(self) -> list[str]:
        with self._lock:
            return sorted(self._tables)

    # -- checkpoints ---------------------------------------------------------

    def _checkpoint_path(self, mapping_id: str) -> Path:
        return self.root / "checkpoints" / f"{mapping_id}.json"

    def load_checkpoint(self, mapping_id: str) -> UnifyCheckpoint | None:
        path = self._checkpoint_path(mapping_id)
        if not path.exists():
            return None
        try:
            return UnifyCheckpoint.from_tree(json.loads(path.read_text(encoding="utf-8")))
        except (ValueError, KeyError) as exc:
            raise SinkUnavailableError(f"corrupt checkpoint {path}: {exc}") from exc

    def save_checkpoint(self, checkpoint: UnifyCheckpoint) -> None:
        self._write_atomic(self._checkpoint_path(checkpoint.mapping_id), checkpoint.to_tree())
