"""Deterministic synthetic event generator for demos, tests, and load runs.

Given a seed, the whole stream is reproducible: agent identities, schedule,
payloads.  Event types follow the classic activity / size / defect split of
developer telemetry.
"""

from __future__ import annotations

import random
import uuid
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

from ..envelope import AgentDescriptor, MetricEnvelope, make_envelope

EVENT_TYPES = ("activity", "size", "defect")

_APPLICATIONS = ("editor", "browser", "terminal", "ide", "chat")
_LANGUAGES = ("python", "go", "java", "rust", "typescript")

DEFAULT_BASE_TIME = datetime(2024, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SyntheticEvent:
    offset_s: float  # schedule position relative to the base time
    envelope: MetricEnvelope


def synthetic_descriptors(n: int, seed: int) -> list[AgentDescriptor]:
    """n agent identities derived deterministically from the seed."""
    rng = random.Random(f"descriptors-{seed}")
    out = []
    for i in range(n):
        out.append(
            AgentDescriptor(
                code_name=f"synthetic-{i}",
                full_name=f"Synthetic load agent {i}",
                secret_key=str(uuid.UUID(int=rng.getrandbits(128), version=4)),
                install_guid=str(uuid.UUID(int=rng.getrandbits(128), version=4)),
            )
        )
    return out


def _payload(rng: random.Random, event_type: str) -> dict:
    application = rng.choice(_APPLICATIONS)
    if event_type == "activity":
        return {
            "application": application,
            "window_title": f"window-{rng.randrange(100)}",
            "event_duration": rng.randrange(1, 3600),
        }
    if event_type == "size":
        return {
            "application": application,
            "language": rng.choice(_LANGUAGES),
            "lines_of_code": rng.randrange(10, 100_000),
        }
    return {
        "application": application,
        "tests_passed": rng.randrange(0, 500),
        "tests_failed": rng.randrange(0, 20),
    }


def synthetic_events(
    agents: list[AgentDescriptor],
    rate: float,
    duration: float,
    seed: int,
    base_time: datetime = DEFAULT_BASE_TIME,
    id_prefix: str | None = None,
) -> list[SyntheticEvent]:
    """The full deterministic schedule: each agent emits ``rate`` events per
    second for ``duration`` seconds, ordered by (time, agent)."""
    if not agents or rate <= 0 or duration <= 0:
        raise ValueError("agents, rate, and duration must all be positive")
    per_agent = int(rate * duration)
    prefix = id_prefix if id_prefix is not None else f"syn-{seed}"
    events: list[SyntheticEvent] = []
    for idx, agent in enumerate(agents):
        rng = random.Random(f"payload-{seed}-{idx}")
        for k in range(per_agent):
            offset = k / rate
            event_type = EVENT_TYPES[rng.randrange(len(EVENT_TYPES))]
            envelope = make_envelope(
                agent=agent,
                timestamp=base_time + timedelta(seconds=offset),
                event_id=f"{prefix}-{idx}-{k}",
                event_type=event_type,
                metrics=_payload(rng, event_type),
            )
            events.append(SyntheticEvent(offset_s=offset, envelope=envelope))
    events.sort(key=lambda ev: (ev.offset_s, ev.envelope.agent.install_guid))
    return events


def run_synthetic_agent(
    agents: int, rate: float, duration: float, seed: int,
    base_time: datetime = DEFAULT_BASE_TIME,
) -> list[MetricEnvelope]:
    """Self-contained deterministic stream across n generated agents."""
    descriptors = synthetic_descriptors(agents, seed)
    return [
        ev.envelope
        for ev in synthetic_events(descriptors, rate, duration, seed, base_time)
    ]
