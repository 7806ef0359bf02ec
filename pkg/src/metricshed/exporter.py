"""Analyst-facing file exports of unified tables.

CSV uses RFC-4180 quoting with LF line endings (a documented deviation from
the strict CRLF convention, for diff-friendliness).  A null serializes as a
bare empty field while an empty string is quoted ``""``, so typed round-trips
are lossless.  ARFF maps integer/real to numeric, boolean to a {true,false}
nominal, timestamp to a date attribute with the ISO millisecond pattern;
nulls are ``?``.  Both exports are pure functions of (rows, column specs):
identical inputs give identical bytes, rows always in key order.
"""

from __future__ import annotations

from typing import Any

from .timeutil import format_instant
from .unifier.mapping import ColumnSpec
from .unifier.project import Row

ARFF_DATE_PATTERN = "yyyy-MM-dd'T'HH:mm:ss.SSS'Z'"


def _scalar_text(value: Any, col_type: str) -> str:
    if col_type == "boolean":
        return "true" if value else "false"
    if col_type == "timestamp":
        return format_instant(value)
    if col_type == "real":
        return repr(float(value))
    return str(value)


# -- CSV ---------------------------------------------------------------------


def _csv_field(value: Any, col_type: str) -> str:
    if value is None:
        return ""
    text = _scalar_text(value, col_type)
    if col_type == "string" and text == "":
        return '""'
    if any(ch in text for ch in (",", '"', "\n", "\r")):
        return '"' + text.replace('"', '""') + '"'
    return text


def export_csv(rows: list[Row], columns: list[ColumnSpec] | tuple[ColumnSpec, ...]) -> bytes:
    """Header line of column names, then one line per row in key order."""
    lines = [",".join(_csv_field(c.name, "string") for c in columns)]
    for row in sorted(rows, key=lambda r: r.key):
        lines.append(
            ",".join(_csv_field(row.values.get(c.name), c.type) for c in columns)
        )
    return ("\n".join(lines) + "\n").encode("utf-8")


# -- ARFF ---------------------------------------------------------------------

_ARFF_QUOTE_TRIGGERS = set(" \t,%'\"{}\\")
_ARFF_ESCAPES = {"\\": "\\\\", "'": "\\'", "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _needs_arff_quotes(text: str) -> bool:
    if text in ("", "?"):
        return True
    return any(
        ch in _ARFF_QUOTE_TRIGGERS or ord(ch) < 0x20 or ord(ch) == 0x7F for ch in text
    )


def _arff_quote(text: str) -> str:
    escaped = "".join(_ARFF_ESCAPES.get(ch, ch) for ch in text)
    return f"'{escaped}'"


def _arff_value(value: Any, col_type: str) -> str:
    if value is None:
        return "?"
    text = _scalar_text(value, col_type)
    if col_type == "string" and _needs_arff_quotes(text):
        return _arff_quote(text)
    return text


def _arff_attribute(col: ColumnSpec) -> str:
    if col.type in ("integer", "real"):
        decl = "numeric"
    elif col.type == "string":
        decl = "string"
    elif col.type == "boolean":
        decl = "{true,false}"
    else:
        decl = f'date "{ARFF_DATE_PATTERN}"'
    return f"@attribute {col.name} {decl}"


def export_arff(
    rows: list[Row],
    columns: list[ColumnSpec] | tuple[ColumnSpec, ...],
    relation_name: str,
) -> bytes:
    """Attribute header then @data rows, nulls as ``?``, key order."""
    name = relation_name
    if _needs_arff_quotes(name):
        name = _arff_quote(name)
    lines = [f"@relation {name}", ""]
    for col in columns:
        lines.append(_arff_attribute(col))
    lines.append("")
    lines.append("@data")
    for row in sorted(rows, key=lambda r: r.key):
        lines.append(
            ",".join(_arff_value(row.values.get(c.name), c.type) for c in columns)
        )
    return ("\n".join(lines) + "\n").encode("utf-8")
