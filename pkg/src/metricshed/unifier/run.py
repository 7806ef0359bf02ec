"""Incremental pull-project-upsert loop with checkpoint replay safety."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol

from ..store import START_CURSOR, Store, StoredRecord
from .mapping import MappingSpec
from .project import Quarantine, Row, Skip, project
from .sink import QUARANTINE_SUFFIX, Sink, UnifyCheckpoint

if TYPE_CHECKING:
    from ..agent.transport import CollectorClient


class Source(Protocol):
    """A resumable page-at-a-time reader over the raw store."""

    def scan(self, cursor: str, limit: int) -> tuple[list[StoredRecord], str]: ...


class StoreSource:
    """Read the store directly (in-process unifiers and tests)."""

    def __init__(self, store: Store):
        self._store = store

    def scan(self, cursor: str, limit: int) -> tuple[list[StoredRecord], str]:
        return self._store.scan(cursor, limit)


class HttpSource:
    """Pull through the collector API, the same channel agents push on."""

    def __init__(self, client: "CollectorClient"):
        self._client = client

    def scan(self, cursor: str, limit: int) -> tuple[list[StoredRecord], str]:
        return self._client.pull(cursor=cursor, limit=limit)


@dataclass
class RunReport:
    scanned: int = 0
    emitted: int = 0
    quarantined: int = 0
    skipped: int = 0
    batches: int = 0

    def to_tree(self) -> dict:
        return {
            "scanned": self.scanned,
            "emitted": self.emitted,
            "quarantined": self.quarantined,
            "skipped": self.skipped,
            "batches": self.batches,
        }


def _record_ref(record: StoredRecord) -> str:
    return f"{record.partition.day_str}/{record.partition.install_guid}#{record.seq}"


def run_unify(
    mapping: MappingSpec,
    source: Source,
    sink: Sink,
    batch_limit: int = 500,
    max_batches: int | None = None,
) -> tuple[UnifyCheckpoint, RunReport]:
    """Pull from the last checkpoint, project, and upsert until drained.

    Rows are committed before the checkpoint that covers them, so a crash
    between the two replays the batch on the next run; upserts keyed by
    (install_guid, event_id) make the replay invisible.  Re-running from any
    earlier checkpoint therefore yields the identical final table.
    """
    mapping.validate()
    sink.create_table(mapping)
    checkpoint = sink.load_checkpoint(mapping.mapping_id) or UnifyCheckpoint(
        mapping_id=mapping.mapping_id, cursor=START_CURSOR
    )
    report = RunReport()
    while True:
        if max_batches is not None and report.batches >= max_batches:
            break
        records, next_cursor = source.scan(checkpoint.cursor, batch_limit)
        if not records and next_cursor == checkpoint.cursor:
            break
        report.batches += 1
        rows: list[Row] = []
        quarantined: list[Row] = []
        for record in records:
            outcome = project(record, mapping)
            if isinstance(outcome, Skip):
                report.skipped += 1
            elif isinstance(outcome, Row):
                rows.append(outcome)
                report.emitted += 1
            elif isinstance(outcome, Quarantine):
                quarantined.append(
                    Row(
                        key=outcome.key,
                        values={"reason": outcome.reason, "ref": _record_ref(record)},
                    )
                )
                report.quarantined += 1
        report.scanned += len(records)
        sink.upsert_rows(mapping.table, rows)
        sink.upsert_rows(mapping.table + QUARANTINE_SUFFIX, quarantined)
        checkpoint = UnifyCheckpoint(
            mapping_id=mapping.mapping_id,
            cursor=next_cursor,
            rows_emitted=checkpoint.rows_emitted + len(rows),
            quarantined=checkpoint.quarantined + len(quarantined),
        )
        sink.save_checkpoint(checkpoint)
        if len(records) < batch_limit:
            break
    return checkpoint, report

