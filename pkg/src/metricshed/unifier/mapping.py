"""Declarative mapping from document trees to relational rows.

Mapping files are UTF-8 text, one mapping per file:

    # lines starting with '#' are comments
    table browsing
    source web-browsing
    column duration_s metrics.event_duration integer required
    column host       metrics.host.host_name string

``table`` names the target table, ``source`` the event_type the mapping
consumes, and each ``column`` line gives name, document path, type, and an
optional ``required`` flag.  Paths are dot-separated keys with ``[i]`` list
indices, rooted at the envelope (so ``timestamp``, ``agent.code_name`` and
``metrics...`` are all addressable).  Row keys are always
(install_guid, event_id); a document missing a required column is
quarantined, never dropped silently.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

IDENT_RE = re.compile(r"^[a-z_][a-z0-9_]*$")
COLUMN_TYPES = {"string", "integer", "real", "boolean", "timestamp"}
KEY_COLUMNS = ("install_guid", "event_id")


class MappingError(ValueError):
    """A mapping file or spec is malformed."""


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    path: str
    type: str
    required: bool = False

    def to_tree(self) -> dict:
        return {
            "name": self.name,
            "path": self.path,
            "type": self.type,
            "required": self.required,
        }

    @classmethod
    def from_tree(cls, tree: dict) -> "ColumnSpec":
        return cls(tree["name"], tree["path"], tree["type"], bool(tree["required"]))


@dataclass(frozen=True)
class MappingSpec:
    table: str
    source_event_type: str
    columns: tuple[ColumnSpec, ...]
    key_columns: tuple[str, str] = KEY_COLUMNS
    on_missing_required: str = "quarantine"

    @property
    def mapping_id(self) -> str:
        return self.table

    def validate(self) -> None:
        if not IDENT_RE.match(self.table):
            raise MappingError(f"bad table identifier {self.table!r}")
        if not self.source_event_type:
            raise MappingError("source event type is empty")
        if not self.columns:
            raise MappingError("mapping has no columns")
        seen = set()
        for col in self.columns:
            if not IDENT_RE.match(col.name):
                raise MappingError(f"bad column identifier {col.name!r}")
            if col.name in seen:
                raise MappingError(f"duplicate column {col.name!r}")
            seen.add(col.name)
            if not col.path:
                raise MappingError(f"column {col.name!r} has an empty path")
            if col.type not in COLUMN_TYPES:
                raise MappingError(f"column {col.name!r} has unknown type {col.type!r}")

    def to_tree(self) -> dict:
        return {
            "table": self.table,
            "source_event_type": self.source_event_type,
            "columns": [c.to_tree() for c in self.columns],
        }

    @classmethod
    def from_tree(cls, tree: dict) -> "MappingSpec":
        return cls(
            table=tree["table"],
            source_event_type=tree["source_event_type"],
            columns=tuple(ColumnSpec.from_tree(c) for c in tree["columns"]),
        )


def parse_mapping(text: str) -> MappingSpec:
    table = None
    source = None
    columns: list[ColumnSpec] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        keyword = parts[0]
        if keyword == "table":
            if len(parts) != 2:
                raise MappingError(f"line {lineno}: table takes one identifier")
            table = parts[1]
        elif keyword == "source":
            if len(parts) != 2:
                raise MappingError(f"line {lineno}: source takes one event type")
            source = parts[1]
        elif keyword == "column":
            if len(parts) not in (4, 5):
                raise MappingError(
                    f"line {lineno}: column takes name, path, type [required]"
                )
            required = False
            if len(parts) == 5:
                if parts[4] != "required":
                    raise MappingError(f"line {lineno}: unknown flag {parts[4]!r}")
                required = True
            columns.append(ColumnSpec(parts[1], parts[2], parts[3], required))
        else:
            raise MappingError(f"line {lineno}: unknown keyword {keyword!r}")
    if table is None:
        raise MappingError("missing 'table' line")
    if source is None:
        raise MappingError("missing 'source' line")
    spec = MappingSpec(table=table, source_event_type=source, columns=tuple(columns))
    spec.validate()
    return spec


def parse_mapping_file(path: str | Path) -> MappingSpec:
    return parse_mapping(Path(path).read_text(encoding="utf-8"))


def format_mapping(spec: MappingSpec) -> str:
    lines = [f"table {spec.table}", f"source {spec.source_event_type}"]
    for col in spec.columns:
        flag = " required" if col.required else ""
        lines.append(f"column {col.name} {col.path} {col.type}{flag}")
    return "\n".join(lines) + "\n"
