"""Deterministic synthetic event generation."""

from __future__ import annotations

from metricshed.agent.synthetic import (
    run_synthetic_agent,
    synthetic_descriptors,
    synthetic_events,
)
from metricshed.envelope import canonical_bytes, validate_envelope


def test_same_seed_identical_streams():
    a = run_synthetic_agent(agents=3, rate=2, duration=3, seed=42)
    b = run_synthetic_agent(agents=3, rate=2, duration=3, seed=42)
    assert [canonical_bytes(x) for x in a] == [canonical_bytes(y) for y in b]


def test_different_seed_differs():
    a = run_synthetic_agent(agents=2, rate=2, duration=2, seed=1)
    b = run_synthetic_agent(agents=2, rate=2, duration=2, seed=2)
    assert [canonical_bytes(x) for x in a] != [canonical_bytes(y) for y in b]


def test_schedule_arithmetic():
    stream = run_synthetic_agent(agents=10, rate=5, duration=10, seed=0)
    assert len(stream) == 500


def test_all_envelopes_validate():
    stream = run_synthetic_agent(agents=4, rate=3, duration=5, seed=9)
    for env in stream:
        validated = validate_envelope(env.to_tree())
        assert validated == env
    types = {env.event_type for env in stream}
    assert types <= {"activity", "size", "defect"}
    assert len(types) > 1


def test_descriptors_deterministic_and_distinct():
    a = synthetic_descriptors(5, seed=3)
    b = synthetic_descriptors(5, seed=3)
    assert a == b
    assert len({d.install_guid for d in a}) == 5


def test_event_ids_unique_per_agent():
    descriptors = synthetic_descriptors(2, seed=3)
    events = synthetic_events(descriptors, rate=4, duration=2, seed=3)
    keys = {(ev.envelope.install_guid, ev.envelope.event_id) for ev in events}
    assert len(keys) == len(events) == 16
