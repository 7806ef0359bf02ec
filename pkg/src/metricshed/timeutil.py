"""Instant parsing and formatting shared across the pipeline.

The wire grammar for instants is ISO-8601 UTC with a mandatory ``Z`` suffix
and full seconds: ``YYYY-MM-DDTHH:MM:SS[.fff...]Z``.  Precision finer than
milliseconds is truncated on parse, never rejected.
"""

from __future__ import annotations

import re
from datetime import datetime, timezone

_INSTANT_RE = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,9}))?Z$"
)


def parse_instant(text: str) -> datetime:
    """Parse an ISO-8601 UTC instant, truncating to millisecond precision.

    Raises ValueError for anything outside the grammar (including missing
    ``Z``, offsets other than ``Z``, and out-of-range date components).
    """
    if not isinstance(text, str):
        raise ValueError(f"instant must be a string, got {type(text).__name__}")
    m = _INSTANT_RE.match(text)
    if m is None:
        raise ValueError(f"not an ISO-8601 UTC instant: {text!r}")
    year, month, day, hour, minute, second = (int(g) for g in m.groups()[:6])
    frac = m.group(7) or ""
    millis = int(frac[:3].ljust(3, "0"))
    return datetime(
        year, month, day, hour, minute, second,
        microsecond=millis * 1000, tzinfo=timezone.utc,
    )


def format_instant(dt: datetime) -> str:
    """Format a UTC datetime as ``YYYY-MM-DDTHH:MM:SS.fffZ``."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    else:
        dt = dt.astimezone(timezone.utc)
    millis = dt.microsecond // 1000
    return f"{dt.year:04d}-{dt.month:02d}-{dt.day:02d}T{dt.hour:02d}:{dt.minute:02d}:{dt.second:02d}.{millis:03d}Z"


def truncate_ms(dt: datetime) -> datetime:
    """Drop sub-millisecond precision, normalizing to UTC."""
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    else:
        dt = dt.astimezone(timezone.utc)
    return dt.replace(microsecond=(dt.microsecond // 1000) * 1000)


def utc_now_ms() -> datetime:
    """Current UTC time at millisecond precision."""
    return truncate_ms(datetime.now(timezone.utc))
