"""Local buffer, review filters, and at-least-once submission."""

from __future__ import annotations

import random

import pytest

from metricshed.agent.buffer import (
    BufferFullError,
    DuplicateEventError,
    EventBuffer,
    PENDING,
    SUBMITTED,
)
from metricshed.agent.filters import ReviewFilter
from metricshed.agent.submit import submit_selected
from metricshed.agent.transport import LocalTransport, TransportError
from metricshed.collector import CollectorService, RegistrationStore
from metricshed.envelope import AgentDescriptor, canonical_bytes, validate_envelope
from metricshed.store import Store

from .conftest import build_envelope, ts
from .harness import FlakyTransport
from .oracles import local_event_matches

READER_KEY = "0a0a0a0a-0000-4000-8000-00000000cafe"


@pytest.fixture
def buffer(tmp_path):
    with EventBuffer(tmp_path / "buffer.log") as buf:
        yield buf


def test_record_pending(buffer, reference_doc):
    env = validate_envelope(reference_doc)
    ev = buffer.record(env)
    assert ev.state == PENDING
    assert ev.submitted_at is None


def test_buffer_survives_restart(tmp_path):
    with EventBuffer(tmp_path / "buffer.log") as buf:
        buf.record(build_envelope("e1"))
        buf.record(build_envelope("e2"))
        buf.mark_submitted(["e1"])
    with EventBuffer(tmp_path / "buffer.log") as buf:
        events = buf.list_events()
        assert [(ev.event_id, ev.state) for ev in events] == [
            ("e1", SUBMITTED),
            ("e2", PENDING),
        ]
        assert events[0].submitted_at is not None


def test_duplicate_record_rejected(buffer):
    buffer.record(build_envelope("e1"))
    with pytest.raises(DuplicateEventError):
        buffer.record(build_envelope("e1"))


def test_buffer_full_fails_loudly(tmp_path):
    with EventBuffer(tmp_path / "buffer.log", cap=2) as buf:
        buf.record(build_envelope("e1"))
        buf.record(build_envelope("e2"))
        with pytest.raises(BufferFullError):
            buf.record(build_envelope("e3"))
        # nothing evicted
        assert [ev.event_id for ev in buf.list_events()] == ["e1", "e2"]


def test_torn_tail_truncated(tmp_path):
    path = tmp_path / "buffer.log"
    with EventBuffer(path) as buf:
        buf.record(build_envelope("e1"))
    with open(path, "a", encoding="utf-8") as fh:
        fh.write('{"kind": "event", "crea')
    with EventBuffer(path) as buf:
        assert [ev.event_id for ev in buf.list_events()] == ["e1"]


def test_keyword_matches_reference_leaves(buffer, reference_doc):
    buffer.record(validate_envelope(reference_doc))
    hits = buffer.list_events(ReviewFilter(keyword="stackoverflow"))
    assert len(hits) == 1
    assert not buffer.list_events(ReviewFilter(keyword="shopping"))
    # keys and numbers are not searched
    assert not buffer.list_events(ReviewFilter(keyword="event_duration"))
    assert not buffer.list_events(ReviewFilter(keyword="1800"))


def test_empty_filter_matches_all(buffer):
    for i in range(5):
        buffer.record(build_envelope(f"e{i}"))
    assert len(buffer.list_events(ReviewFilter())) == 5


def test_filter_oracle_random_buffer(tmp_path):
    rng = random.Random(99)
    apps = ["editor", "browser", None]
    words = ["alpha", "beta", "gamma delta", "Epsilon"]
    with EventBuffer(tmp_path / "buffer.log") as buf:
        for i in range(200):
            metrics = {"note": rng.choice(words)}
            app = rng.choice(apps)
            if app:
                metrics["application"] = app
            buf.record(
                build_envelope(
                    f"e{i}",
                    when=ts(day=rng.randrange(1, 28), hour=rng.randrange(24)),
                    **metrics,
                )
            )
        if rng.random() < 1:
            buf.mark_submitted([f"e{i}" for i in range(0, 200, 3)])
        filters = [
            ReviewFilter(),
            ReviewFilter(keyword="ALPHA"),
            ReviewFilter(keyword="epsilon"),
            ReviewFilter(application="editor"),
            ReviewFilter(application="missing"),
            ReviewFilter(ts_from=ts(day=5, hour=0), ts_to=ts(day=20, hour=0)),
            ReviewFilter(state="pending"),
            ReviewFilter(keyword="gamma", application="browser", state="submitted"),
        ]
        everything = buf.list_events()
        for flt in filters:
            expect = [
                ev
                for ev in everything
                if local_event_matches(
                    ev, flt.keyword, flt.application, flt.ts_from, flt.ts_to, flt.state
                )
            ]
            assert buf.list_events(flt) == expect


# -- submission ---------------------------------------------------------------


@pytest.fixture
def rig(tmp_path):
    store = Store(tmp_path / "server", sync="off")
    registrations = RegistrationStore(tmp_path / "registrations.jsonl")
    service = CollectorService(store, registrations, READER_KEY)
    reg = service.register_agent("rig-agent", "rig")
    agent = AgentDescriptor(
        code_name=reg.code_name,
        full_name=reg.full_name,
        secret_key=reg.secret_key,
        install_guid=reg.install_guid,
    )
    transport = LocalTransport(
        service,
        secret_key=reg.secret_key,
        install_guid=reg.install_guid,
        reader_key=READER_KEY,
    )
    buffer = EventBuffer(tmp_path / "buffer.log")
    yield store, service, agent, transport, buffer
    buffer.close()
    store.close()


def test_submit_all_accepted(rig):
    store, service, agent, transport, buffer = rig
    for i in range(3):
        buffer.record(build_envelope(f"e{i}", agent=agent))
    receipt = submit_selected(buffer, ["e0", "e1", "e2"], transport)
    assert receipt.accepted == 3
    assert all(ev.state == SUBMITTED for ev in buffer.list_events())


def test_transport_failure_leaves_all_pending_then_retry(rig):
    store, service, agent, transport, buffer = rig
    for i in range(3):
        buffer.record(build_envelope(f"e{i}", agent=agent))
    flaky = FlakyTransport(transport, ["drop-after"])
    with pytest.raises(TransportError):
        submit_selected(buffer, ["e0", "e1", "e2"], flaky)
    assert all(ev.state == PENDING for ev in buffer.list_events())
    # server already applied the batch; the retry sees duplicates
    receipt = submit_selected(buffer, ["e0", "e1", "e2"], flaky)
    assert (receipt.accepted, receipt.duplicates) == (0, 3)
    assert all(ev.state == SUBMITTED for ev in buffer.list_events())
    assert store.record_count == 3


def test_partial_rejection_keeps_rejected_pending(rig):
    store, service, agent, transport, buffer = rig
    good = build_envelope("good", agent=agent)
    bad = build_envelope("bad", agent=agent)
    bad.metrics.pop("event_type")  # break it after validation
    buffer.record(good)
    buffer.record(bad)
    receipt = submit_selected(buffer, ["good", "bad"], transport)
    assert receipt.accepted == 1
    assert len(receipt.rejected) == 1
    assert buffer.get("good").state == SUBMITTED
    assert buffer.get("bad").state == PENDING
    assert buffer.get("bad").last_error is not None


def test_submit_requires_pending(rig):
    store, service, agent, transport, buffer = rig
    buffer.record(build_envelope("e0", agent=agent))
    submit_selected(buffer, ["e0"], transport)
    with pytest.raises(ValueError):
        submit_selected(buffer, ["e0"], transport)
    with pytest.raises(KeyError):
        submit_selected(buffer, ["missing"], transport)


def test_effectively_once_small(rig):
    """Random retry schedules always converge to exactly-once server state."""
    store, service, agent, transport, buffer = rig
    rng = random.Random(5)
    for i in range(20):
        buffer.record(build_envelope(f"e{i}", agent=agent, idx=i))
    intent = {env.record_id for env in (ev.envelope for ev in buffer.list_events())}
    plan = [rng.choice(["ok", "drop-before", "drop-after"]) for _ in range(50)]
    flaky = FlakyTransport(transport, plan)
    for _ in range(60):
        pending = buffer.pending_ids()
        if not pending:
            break
        try:
            submit_selected(buffer, pending, flaky)
        except TransportError:
            continue
    assert not buffer.pending_ids()
    records = list(store.scan_all())
    assert {r.record_id for r in records} == intent
    assert len(records) == 20
