"""Shared fixtures: the reference wire document, builders, a live server."""

from __future__ import annotations

import copy
import threading
import time
from datetime import datetime, timezone

import pytest

from metricshed.envelope import AgentDescriptor, make_envelope

# The reference event document used throughout the suite: a browser-activity
# event from a desktop agent, exercising nested maps, a list payload, ints,
# and both reserved keys.
REFERENCE_DOC = {
    "timestamp": "2016-11-15T13:25:43.511Z",
    "agent": {
        "code_name": "MacOS developer's agent",
        "full_name": "Developer's activity collector",
        "secret_key": "6a81d622-5e24-4d9e-adc0-e3f7f2d93ac7",
        "install_guid": "2187b011-6b9d-4d86-8083-dd09a0d73019",
    },
    "metrics": {
        "event_id": "4a8acf6e7fbadc242de5b4f3",
        "event_type": "web-browsing",
        "event_duration": 1800,
        "user": {
            "username": "student",
            "company": "Innopolis University",
        },
        "host": {
            "host_name": "lab5_pc1",
            "ip_address": "10.90.121.49",
            "mac_address": "FF-FF-FF-FF-FF-FF",
            "os_version": "macOS 10 Sierra Version 10.12.1",
            "sw_version": "Safari Version 10.0.2 (12602.3.12.0.1)",
        },
        "sample_metric_data": ["stackoverflow.com", "google.com", "youtube.com"],
    },
}


@pytest.fixture
def reference_doc():
    return copy.deepcopy(REFERENCE_DOC)


TEST_AGENT = AgentDescriptor(
    code_name="test-agent",
    full_name="Test agent",
    secret_key="11111111-2222-4333-8444-555555555555",
    install_guid="aaaaaaaa-bbbb-4ccc-8ddd-eeeeeeeeeeee",
)


def ts(day: int = 15, hour: int = 12, minute: int = 0, second: int = 0, ms: int = 0,
       month: int = 11, year: int = 2016) -> datetime:
    return datetime(year, month, day, hour, minute, second, ms * 1000, tzinfo=timezone.utc)


def build_envelope(event_id: str, event_type: str = "activity",
                   agent: AgentDescriptor = TEST_AGENT, when: datetime | None = None,
                   **metrics):
    return make_envelope(
        agent=agent,
        timestamp=when or ts(),
        event_id=event_id,
        event_type=event_type,
        metrics=metrics,
    )


READER_KEY = "0a0a0a0a-0000-4000-8000-0000000000ff"


class LiveServer:
    """A real uvicorn server on a loopback port, for CLI and HTTP tests."""

    def __init__(self, data_dir, sync: str = "off"):
        import uvicorn

        from metricshed.collector import CollectorService, RegistrationStore
        from metricshed.server import build_app
        from metricshed.store import Store

        self.store = Store(data_dir, sync=sync)
        self.service = CollectorService(
            self.store, RegistrationStore(data_dir / "registrations.jsonl"), READER_KEY
        )
        config = uvicorn.Config(
            build_app(self.service),
            host="127.0.0.1",
            port=0,
            log_level="warning",
            access_log=False,
        )
        self._server = uvicorn.Server(config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self._thread.start()
        deadline = time.time() + 10
        while not self._server.started:
            if time.time() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        self.url = f"http://127.0.0.1:{port}"

    def stop(self) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=10)
        self.store.close()


@pytest.fixture
def live_server(tmp_path):
    server = LiveServer(tmp_path / "server-data")
    yield server
    server.stop()
