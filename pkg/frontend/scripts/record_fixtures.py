#!/usr/bin/env python3
"""Record real API responses as test fixtures for the web UI.

Seeds a local agent buffer and a collector store with a known event set,
then captures the exact JSON the production endpoints return for the query
strings the UI issues.  Re-run after changing the seeded data or the API:

    python3 scripts/record_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from tempfile import TemporaryDirectory

from fastapi.testclient import TestClient

FRONTEND = Path(__file__).resolve().parent.parent
FIXTURES = FRONTEND / "tests" / "fixtures"

sys.path.insert(0, str(FRONTEND.parent / "tests"))

from metricshed.agent.buffer import EventBuffer
from metricshed.agent.review_server import build_agent_app
from metricshed.agent.transport import LocalTransport
from metricshed.collector import CollectorService, RegistrationStore
from metricshed.envelope import AgentDescriptor, make_envelope
from metricshed.server import build_app
from metricshed.store import Store
from metricshed.timeutil import parse_instant

READER_KEY = "0a0a0a0a-0000-4000-8000-00000000f1x7"


def seed_events(agent: AgentDescriptor):
    def env(event_id, event_type, when, **metrics):
        return make_envelope(
            agent=agent,
            timestamp=parse_instant(when),
            event_id=event_id,
            event_type=event_type,
            metrics=metrics,
        )

    return [
        env("e-web-1", "web-browsing", "2016-11-15T13:25:43.511Z",
            application="browser", event_duration=1800,
            sample_metric_data=["stackoverflow.com", "github.com"]),
        env("e-ide-1", "activity", "2016-11-15T10:00:00.000Z",
            application="editor", window_title="main.py - editor",
            event_duration=1200),
        env("e-web-2", "web-browsing", "2016-11-16T09:00:00.000Z",
            application="browser", event_duration=600,
            sample_metric_data=["youtube.com"],
            host={"host_name": "lab5_pc1"}),
        env("e-size-1", "size", "2016-11-16T11:00:00.000Z",
            application="editor", language="python", lines_of_code=4200,
            host={"host_name": "lab5_pc1"}),
        env("e-test-1", "defect", "2016-11-17T08:30:00.000Z",
            application="ci", tests_passed=120, tests_failed=3,
            host={"host_name": "lab5_pc2"}),
        env("e-web-3", "web-browsing", "2016-11-17T14:00:00.000Z",
            application="browser", event_duration=300,
            sample_metric_data=["stackoverflow.com"]),
    ]


REVIEW_QUERIES = [
    "state=pending",
    "state=submitted",
    "keyword=stackoverflow&state=pending",
    "application=editor&state=pending",
    "from=2016-11-16T00:00:00.000Z&state=pending&to=2016-11-17T00:00:00.000Z",
    "keyword=stackoverflow&state=submitted",
]

RANGE = ("2016-11-14T00:00:00.000Z", "2016-11-18T00:00:00.000Z")
EMPTY_RANGE = ("2016-11-14T00:00:00.000Z", "2016-11-17T00:00:00.000Z")


def canonical_query(query: str) -> str:
    pairs = sorted(p.split("=", 1) for p in query.split("&") if p)
    return "&".join(f"{k}={v}" for k, v in pairs)


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    out: dict[str, object] = {}

    with TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        store = Store(tmp / "server", sync="off")
        service = CollectorService(
            store, RegistrationStore(tmp / "reg.jsonl"), READER_KEY
        )
        reg = service.register_agent("ui-fixture-agent", "UI fixture agent")
        agent = AgentDescriptor(
            reg.code_name, reg.full_name, reg.secret_key, reg.install_guid
        )
        events = seed_events(agent)

        # -- review screen: recorded responses per canonical query ----------
        buffer = EventBuffer(tmp / "buffer.log")
        for env in events:
            buffer.record(env, created_at=env.timestamp)
        transport = LocalTransport(
            service, secret_key=reg.secret_key, install_guid=reg.install_guid
        )
        agent_web = TestClient(build_agent_app(buffer, transport))
        review: dict[str, object] = {}
        for query in REVIEW_QUERIES:
            response = agent_web.get(f"/local/events?{query}")
            response.raise_for_status()
            review[canonical_query(query)] = response.json()
        out["review_queries"] = review
        out["status_initial"] = agent_web.get("/local/status").json()

        # -- collector analytics: empty store first -------------------------
        collector_web = TestClient(build_app(service))
        headers = {"X-Secret-Key": READER_KEY}

        def analytics(path, params):
            response = collector_web.get(path, params=params, headers=headers)
            response.raise_for_status()
            return response.json()

        out["stats_empty"] = collector_web.get("/api/v1/stats", headers=headers).json()
        out["over_time_empty"] = analytics(
            "/api/v1/analytics/over-time",
            {"from": EMPTY_RANGE[0], "to": EMPTY_RANGE[1]},
        )
        out["breakdown_empty"] = analytics(
            "/api/v1/analytics/breakdown",
            {"dimension": "event_type", "from": EMPTY_RANGE[0], "to": EMPTY_RANGE[1]},
        )

        # -- now with the seeded events stored ------------------------------
        receipt = service.submit_events(
            reg.secret_key, reg.install_guid, [e.to_tree() for e in events]
        )
        assert receipt.accepted == len(events)
        out["over_time"] = analytics(
            "/api/v1/analytics/over-time", {"from": RANGE[0], "to": RANGE[1]}
        )
        for dimension in ("event_type", "application", "host"):
            out[f"breakdown_{dimension}"] = analytics(
                "/api/v1/analytics/breakdown",
                {"dimension": dimension, "from": RANGE[0], "to": RANGE[1]},
            )
        out["stats_seeded"] = collector_web.get("/api/v1/stats", headers=headers).json()
        buffer.close()
        store.close()

    for name, payload in out.items():
        path = FIXTURES / f"{name}.json"
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path.relative_to(FRONTEND)}")


if __name__ == "__main__":
    main()
