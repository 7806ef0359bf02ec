"""Append-only, partitioned, deduplicating store for raw envelopes.

On-disk layout (internal detail, not a public contract):

    <root>/
      partitions/<YYYY-MM-DD>/<install_guid>.log   one JSON record per line
      record_index.log                             dedup journal

A partition holds the records of one agent installation for one UTC calendar
day of the envelope timestamp.  Each log line is the canonical JSON of
``{"envelope": ..., "received_at": ..., "seq": ...}``.  Write ordering is
payload before index: the record line is flushed to the partition log before
its entry is appended to ``record_index.log``, so after a crash the logs are
the source of truth and recovery re-derives missing index entries.  A
truncated final line (torn write) is discarded; corruption anywhere else
raises CorruptPartitionError.

Appends are serialized under one lock; scans read immutable list prefixes and
never block writers.
"""

from __future__ import annotations

import base64
import bisect
import json
import os
import threading
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Any, BinaryIO, Iterator

from .envelope import MetricEnvelope, canonical_json, validate_envelope
from .timeutil import format_instant, parse_instant, utc_now_ms

MAX_SCAN_LIMIT = 10_000


class CursorError(ValueError):
    """The supplied cursor token is not one this store issued."""


class StorageFullError(RuntimeError):
    """The configured on-disk byte budget would be exceeded."""


class CorruptPartitionError(RuntimeError):
    def __init__(self, partition: str, detail: str):
        self.partition = partition
        super().__init__(f"corrupt partition {partition}: {detail}")


@dataclass(frozen=True, order=True)
class PartitionKey:
    """Scan order is (day, install_guid); field order here matters."""

    day: date
    install_guid: str

    @property
    def day_str(self) -> str:
        return self.day.isoformat()

    def to_tree(self) -> dict[str, str]:
        return {"day": self.day_str, "install_guid": self.install_guid}


@dataclass(frozen=True)
class StoredRecord:
    envelope: MetricEnvelope
    received_at: datetime
    partition: PartitionKey
    seq: int

    @property
    def record_id(self) -> tuple[str, str]:
        return self.envelope.record_id

    def to_tree(self) -> dict[str, Any]:
        return {
            "envelope": self.envelope.to_tree(),
            "received_at": format_instant(self.received_at),
            "partition": self.partition.to_tree(),
            "seq": self.seq,
        }

    @classmethod
    def from_tree(cls, tree: dict[str, Any]) -> "StoredRecord":
        envelope = validate_envelope(tree["envelope"])
        pk = tree["partition"]
        return cls(
            envelope=envelope,
            received_at=parse_instant(tree["received_at"]),
            partition=PartitionKey(
                date.fromisoformat(pk["day"]), pk["install_guid"]
            ),
            seq=int(tree["seq"]),
        )


@dataclass(frozen=True)
class ScanFilter:
    """Exact-match and half-open time-range predicate over records."""

    install_guid: str | None = None
    event_type: str | None = None
    ts_from: datetime | None = None
    ts_to: datetime | None = None

    def matches(self, record: StoredRecord) -> bool:
        env = record.envelope
        if self.install_guid is not None and env.install_guid != self.install_guid:
            return False
        if self.event_type is not None and env.event_type != self.event_type:
            return False
        if self.ts_from is not None and env.timestamp < self.ts_from:
            return False
        if self.ts_to is not None and env.timestamp >= self.ts_to:
            return False
        return True


START_CURSOR = ""


def encode_cursor(partition: PartitionKey, seq: int) -> str:
    raw = json.dumps(
        {"d": partition.day_str, "g": partition.install_guid, "s": seq},
        separators=(",", ":"),
    ).encode("ascii")
    return base64.urlsafe_b64encode(raw).decode("ascii")


def decode_cursor(token: str) -> tuple[PartitionKey, int] | None:
    """Returns None for the start cursor; raises CursorError otherwise."""
    if token in ("", "start"):
        return None
    try:
        raw = base64.urlsafe_b64decode(token.encode("ascii"))
        obj = json.loads(raw.decode("ascii"))
        day = date.fromisoformat(obj["d"])
        guid = obj["g"]
        seq = obj["s"]
        if not isinstance(guid, str) or not isinstance(seq, int) or seq < 0:
            raise ValueError("bad cursor fields")
    except (ValueError, KeyError, TypeError) as exc:
        raise CursorError(f"bad cursor token: {exc}") from exc
    return PartitionKey(day, guid), seq


@dataclass
class PartitionStats:
    count: int = 0
    bytes: int = 0
    min_timestamp: datetime | None = None
    max_timestamp: datetime | None = None

    def to_tree(self) -> dict[str, Any]:
        return {
            "count": self.count,
            "bytes": self.bytes,
            "min_timestamp": format_instant(self.min_timestamp) if self.min_timestamp else None,
            "max_timestamp": format_instant(self.max_timestamp) if self.max_timestamp else None,
        }


@dataclass
class _Partition:
    key: PartitionKey
    records: list[StoredRecord] = field(default_factory=list)
    stats: PartitionStats = field(default_factory=PartitionStats)
    fh: BinaryIO | None = None


class Store:
    """Disk-backed envelope store.

    sync modes: "always" fsyncs after every record, "batch" fsyncs once per
    append call (single or batched), "off" flushes to the OS only.  All modes
    survive a process restart; fsync additionally covers host crashes.
    """

    def __init__(self, root: str | Path, sync: str = "batch", max_bytes: int | None = None):
        if sync not in ("always", "batch", "off"):
            raise ValueError(f"unknown sync mode {sync!r}")
        self.root = Path(root)
        self.sync = sync
        self.max_bytes = max_bytes
        self._lock = threading.Lock()
        self._partitions: dict[PartitionKey, _Partition] = {}
        self._sorted_keys: list[PartitionKey] = []
        self._index: dict[tuple[str, str], StoredRecord] = {}
        self._total_bytes = 0
        self._index_fh: BinaryIO | None = None
        (self.root / "partitions").mkdir(parents=True, exist_ok=True)
        self._recover()
        self._index_fh = open(self.root / "record_index.log", "ab")

    # -- recovery ---------------------------------------------------------

    def _read_log_lines(self, path: Path, partition_name: str) -> list[dict[str, Any]]:
        """Parse a JSONL file, discarding a torn final line in place."""
        out: list[dict[str, Any]] = []
        data = path.read_bytes()
        offset = 0
        good_end = 0
        while offset < len(data):
            nl = data.find(b"\n", offset)
            if nl == -1:
                # torn tail: the write never completed, drop it
                break
            line = data[offset : nl]
            try:
                out.append(json.loads(line.decode("utf-8")))
            except (ValueError, UnicodeDecodeError) as exc:
                raise CorruptPartitionError(partition_name, f"bad line at byte {offset}: {exc}")
            offset = nl + 1
            good_end = offset
        if good_end != len(data):
            with open(path, "r+b") as fh:
                fh.truncate(good_end)
        return out

    def _recover(self) -> None:
        part_root = self.root / "partitions"
        for day_dir in sorted(part_root.iterdir()) if part_root.exists() else []:
            if not day_dir.is_dir():
                continue
            try:
                day = date.fromisoformat(day_dir.name)
            except ValueError:
                raise CorruptPartitionError(day_dir.name, "bad day directory name")
            for log_path in sorted(day_dir.glob("*.log")):
                guid = log_path.stem
                key = PartitionKey(day, guid)
                name = f"{key.day_str}/{guid}"
                part = _Partition(key)
                for i, tree in enumerate(self._read_log_lines(log_path, name)):
                    try:
                        rec = StoredRecord(
                            envelope=validate_envelope(tree["envelope"]),
                            received_at=parse_instant(tree["received_at"]),
                            partition=key,
                            seq=int(tree["seq"]),
                        )
                    except (KeyError, ValueError) as exc:
                        raise CorruptPartitionError(name, f"record {i}: {exc}")
                    if rec.seq != i:
                        raise CorruptPartitionError(name, f"seq {rec.seq} at position {i}")
                    if rec.record_id in self._index:
                        raise CorruptPartitionError(name, f"duplicate record_id {rec.record_id}")
                    part.records.append(rec)
                    self._index[rec.record_id] = rec
                    self._track_stats(part, rec, len(canonical_json(tree).encode("utf-8")) + 1)
                if part.records:
                    self._partitions[key] = part
                    bisect.insort(self._sorted_keys, key)
        self._reconcile_index_journal()

    def _reconcile_index_journal(self) -> None:
        journal = self.root / "record_index.log"
        seen: set[tuple[str, str]] = set()
        rewrite = False
        if journal.exists():
            for entry in self._read_log_lines(journal, "record_index"):
                rid = (entry.get("install_guid"), entry.get("event_id"))
                if rid not in self._index:
                    rewrite = True  # entry without payload: index ran ahead
                    continue
                seen.add(rid)
        missing = [rid for rid in self._index if rid not in seen]
        if rewrite:
            with open(journal, "wb") as fh:
                for rid, rec in self._index.items():
                    fh.write(self._index_line(rec))
                fh.flush()
                os.fsync(fh.fileno())
        elif missing:
            with open(journal, "ab") as fh:
                for rid in missing:
                    fh.write(self._index_line(self._index[rid]))
                fh.flush()
                os.fsync(fh.fileno())

    def _track_stats(self, part: _Partition, rec: StoredRecord, nbytes: int) -> None:
        st = part.stats
        st.count += 1
        st.bytes += nbytes
        ts = rec.envelope.timestamp
        if st.min_timestamp is None or ts < st.min_timestamp:
            st.min_timestamp = ts
        if st.max_timestamp is None or ts > st.max_timestamp:
            st.max_timestamp = ts
        self._total_bytes += nbytes

    # -- writing ----------------------------------------------------------

    def _index_line(self, rec: StoredRecord) -> bytes:
        return (
            canonical_json(
                {
                    "install_guid": rec.envelope.install_guid,
                    "event_id": rec.envelope.event_id,
                    "day": rec.partition.day_str,
                    "seq": rec.seq,
                }
            )
            + "\n"
        ).encode("utf-8")

    def _partition_for_key(self, key: PartitionKey) -> _Partition:
        part = self._partitions.get(key)
        if part is None:
            part = _Partition(key)
            self._partitions[key] = part
            bisect.insort(self._sorted_keys, key)
        return part

    def _open_partition_file(self, part: _Partition) -> BinaryIO:
        if part.fh is None:
            day_dir = self.root / "partitions" / part.key.day_str
            day_dir.mkdir(parents=True, exist_ok=True)
            part.fh = open(day_dir / f"{part.key.install_guid}.log", "ab")
        return part.fh

    def append(
        self, envelope: MetricEnvelope, received_at: datetime | None = None
    ) -> tuple[StoredRecord, bool]:
        """Persist one envelope; returns (record, fresh).

        Idempotent on (install_guid, event_id): a duplicate returns the
        original record unchanged and never mutates stored bytes.
        """
        return self.append_many([envelope], received_at)[0]

    def append_many(
        self, envelopes: list[MetricEnvelope], received_at: datetime | None = None
    ) -> list[tuple[StoredRecord, bool]]:
        """Append a batch: one write/flush/fsync per touched file per call.

        Records become visible to scans only after their bytes reached the
        partition log (payload first, index entry after).
        """
        received_at = received_at or utc_now_ms()
        out: list[tuple[StoredRecord, bool]] = []
        with self._lock:
            staged: dict[PartitionKey, list[tuple[StoredRecord, bytes]]] = {}
            staged_ids: dict[tuple[str, str], StoredRecord] = {}
            added_bytes = 0
            for envelope in envelopes:
                existing = self._index.get(envelope.record_id) or staged_ids.get(
                    envelope.record_id
                )
                if existing is not None:
                    out.append((existing, False))
                    continue
                key = PartitionKey(envelope.timestamp.date(), envelope.install_guid)
                batch = staged.setdefault(key, [])
                part = self._partitions.get(key)
                rec = StoredRecord(
                    envelope=envelope,
                    received_at=received_at,
                    partition=key,
                    seq=(len(part.records) if part else 0) + len(batch),
                )
                line = (canonical_json(rec_line_tree(rec)) + "\n").encode("utf-8")
                if (
                    self.max_bytes is not None
                    and self._total_bytes + added_bytes + len(line) > self.max_bytes
                ):
                    raise StorageFullError(f"store would exceed {self.max_bytes} bytes")
                added_bytes += len(line)
                batch.append((rec, line))
                staged_ids[envelope.record_id] = rec
                out.append((rec, True))

            # payload lines reach the log before anything becomes visible
            for key, batch in staged.items():
                fh = self._open_partition_file(self._partition_for_key(key))
                fh.write(b"".join(line for _, line in batch))
                fh.flush()
                if self.sync in ("always", "batch"):
                    os.fsync(fh.fileno())
            for key, batch in staged.items():
                part = self._partitions[key]
                for rec, line in batch:
                    part.records.append(rec)
                    self._index[rec.record_id] = rec
                    self._track_stats(part, rec, len(line))
            if staged:
                assert self._index_fh is not None
                self._index_fh.write(
                    b"".join(
                        self._index_line(rec)
                        for batch in staged.values()
                        for rec, _ in batch
                    )
                )
                self._index_fh.flush()
                if self.sync in ("always", "batch"):
                    os.fsync(self._index_fh.fileno())
        return out

    # -- reading ----------------------------------------------------------

    def scan(
        self,
        cursor: str = START_CURSOR,
        limit: int = 100,
        flt: ScanFilter | None = None,
    ) -> tuple[list[StoredRecord], str]:
        """One page of the global scan order (day, install_guid, seq).

        The returned cursor resumes strictly after the last record this call
        examined, so repeated scans always make progress; concatenating pages
        from successive cursors over a fixed store equals one full scan.
        """
        if not (1 <= limit <= MAX_SCAN_LIMIT):
            raise ValueError(f"limit must be in 1..{MAX_SCAN_LIMIT}")
        flt = flt or ScanFilter()
        start = decode_cursor(cursor)
        keys = list(self._sorted_keys)
        out: list[StoredRecord] = []
        last_pos: tuple[PartitionKey, int] | None = start

        from_day = flt.ts_from.date() if flt.ts_from else None
        # a record with timestamp < ts_to lives on a day <= ts_to's day
        to_day = flt.ts_to.date() if flt.ts_to else None

        for key in keys:
            if start is not None and key < start[0]:
                continue
            records = self._partitions[key].records
            snapshot = len(records)
            begin = start[1] + 1 if start is not None and key == start[0] else 0
            if begin >= snapshot:
                continue
            prunable = (
                (flt.install_guid is not None and key.install_guid != flt.install_guid)
                or (from_day is not None and key.day < from_day)
                or (to_day is not None and key.day > to_day)
            )
            if prunable:
                last_pos = (key, snapshot - 1)
                continue
            for i in range(begin, snapshot):
                rec = records[i]
                last_pos = (key, i)
                if flt.matches(rec):
                    out.append(rec)
                    if len(out) == limit:
                        return out, encode_cursor(*last_pos)
        if last_pos is None:
            return out, cursor if cursor else START_CURSOR
        return out, encode_cursor(*last_pos)

    def scan_all(self, flt: ScanFilter | None = None, page: int = 1000) -> Iterator[StoredRecord]:
        """Iterate every matching record via repeated paging."""
        cursor = START_CURSOR
        while True:
            records, nxt = self.scan(cursor, page, flt)
            yield from records
            if nxt == cursor:
                return
            cursor = nxt

    def stats(self) -> dict[PartitionKey, PartitionStats]:
        """Per-partition record counts, byte sizes, and timestamp ranges."""
        out: dict[PartitionKey, PartitionStats] = {}
        for key in list(self._sorted_keys):
            st = self._partitions[key].stats
            out[key] = PartitionStats(st.count, st.bytes, st.min_timestamp, st.max_timestamp)
        return out

    @property
    def partition_count(self) -> int:
        return len(self._partitions)

    @property
    def record_count(self) -> int:
        return len(self._index)

    def close(self) -> None:
        with self._lock:
            for part in self._partitions.values():
                if part.fh is not None:
                    part.fh.close()
                    part.fh = None
            if self._index_fh is not None:
                self._index_fh.close()
                self._index_fh = None

    def __enter__(self) -> "Store":
        return self

    def __exit__(self, *exc: Any) -> None:
        self.close()


def rec_line_tree(rec: StoredRecord) -> dict[str, Any]:
    """Shape of one partition log line."""
    return {
        "envelope": rec.envelope.to_tree(),
        "received_at": format_instant(rec.received_at),
        "seq": rec.seq,
    }


def day_range(ts_from: datetime, ts_to: datetime) -> list[date]:
    """UTC days intersecting the half-open range [ts_from, ts_to)."""
    if ts_to <= ts_from:
        return []
    first = ts_from.date()
    last = (ts_to - timedelta(milliseconds=1)).date()
    out = []
    d = first
    while d <= last:
        out.append(d)
        d += timedelta(days=1)
    return out
