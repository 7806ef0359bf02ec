"""Aggregation queries over the raw store, backing the dashboard charts.

These run against store scans rather than unified tables so dashboards work
before any mapping has been authored.  All bucketing uses UTC day boundaries
and half-open time ranges [t0, t1).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Any

from .store import ScanFilter, Store, day_range

DIMENSIONS = ("event_type", "application", "host")
NONE_BUCKET = "(none)"


class BadRangeError(ValueError):
    pass


@dataclass(frozen=True)
class Bucket:
    label: str
    count: int
    total_duration_s: float

    def to_tree(self) -> dict[str, Any]:
        return {
            "label": self.label,
            "count": self.count,
            "total_duration_s": self.total_duration_s,
        }


@dataclass(frozen=True)
class AggregateSeries:
    dimension: str
    buckets: tuple[Bucket, ...]

    def to_tree(self) -> dict[str, Any]:
        return {
            "dimension": self.dimension,
            "buckets": [b.to_tree() for b in self.buckets],
        }


def _duration_of(metrics: dict) -> float:
    value = metrics.get("event_duration")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return 0
    return value


def _check_range(ts_from: datetime, ts_to: datetime) -> None:
    if ts_from is None or ts_to is None or ts_to <= ts_from:
        raise BadRangeError("range must be a non-empty half-open interval [from, to)")


def events_over_time(
    store: Store,
    ts_from: datetime,
    ts_to: datetime,
    granularity: str = "day",
    install_guid: str | None = None,
    event_type: str | None = None,
) -> AggregateSeries:
    """One bucket per UTC day intersecting [ts_from, ts_to), zero-filled."""
    _check_range(ts_from, ts_to)
    if granularity != "day":
        raise BadRangeError(f"unsupported granularity {granularity!r}")
    counts: dict[str, list] = {
        d.isoformat(): [0, 0] for d in day_range(ts_from, ts_to)
    }
    flt = ScanFilter(
        install_guid=install_guid, event_type=event_type, ts_from=ts_from, ts_to=ts_to
    )
    for rec in store.scan_all(flt):
        label = rec.envelope.timestamp.date().isoformat()
        entry = counts[label]
        entry[0] += 1
        entry[1] += _duration_of(rec.envelope.metrics)
    return AggregateSeries(
        dimension="day",
        buckets=tuple(
            Bucket(label, c, t) for label, (c, t) in sorted(counts.items())
        ),
    )


def _dimension_label(metrics: dict, dimension: str) -> str:
    if dimension == "event_type":
        value = metrics.get("event_type")
    elif dimension == "application":
        value = metrics.get("application")
    elif dimension == "host":
        host = metrics.get("host")
        value = host.get("host_name") if isinstance(host, dict) else None
    else:
        raise BadRangeError(f"unknown dimension {dimension!r}")
    return value if isinstance(value, str) else NONE_BUCKET


def breakdown(
    store: Store, dimension: str, ts_from: datetime, ts_to: datetime
) -> AggregateSeries:
    """Group matching documents over a reserved path; documents lacking it
    (or holding a non-string there) land in the "(none)" bucket."""
    _check_range(ts_from, ts_to)
    if dimension not in DIMENSIONS:
        raise BadRangeError(f"unknown dimension {dimension!r}")
    counts: dict[str, list] = {}
    flt = ScanFilter(ts_from=ts_from, ts_to=ts_to)
    for rec in store.scan_all(flt):
        label = _dimension_label(rec.envelope.metrics, dimension)
        entry = counts.setdefault(label, [0, 0])
        entry[0] += 1
        entry[1] += _duration_of(rec.envelope.metrics)
    return AggregateSeries(
        dimension=dimension,
        buckets=tuple(
            Bucket(label, c, t) for label, (c, t) in sorted(counts.items())
        ),
    )
