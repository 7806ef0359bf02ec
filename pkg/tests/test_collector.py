"""Collector service and its HTTP surface."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from metricshed.collector import (
    AuthError,
    BatchTooLargeError,
    CollectorService,
    RegistrationStore,
)
from metricshed.envelope import ErrorKind, ValidationError, validate_envelope
from metricshed.server import build_app
from metricshed.store import ScanFilter, Store

from .conftest import build_envelope, ts

READER_KEY = "0a0a0a0a-0000-4000-8000-000000000001"


@pytest.fixture
def service(tmp_path):
    store = Store(tmp_path / "data", sync="off")
    registrations = RegistrationStore(tmp_path / "registrations.jsonl")
    svc = CollectorService(store, registrations, READER_KEY)
    yield svc
    store.close()


@pytest.fixture
def registered(service):
    return service.register_agent("macos-activity", "Developer's activity collector")


def doc_for(reg, event_id, event_type="activity", when=None, **metrics):
    from metricshed.envelope import AgentDescriptor

    agent = AgentDescriptor(
        code_name=reg.code_name,
        full_name=reg.full_name,
        secret_key=reg.secret_key,
        install_guid=reg.install_guid,
    )
    return build_envelope(
        event_id, event_type=event_type, agent=agent, when=when, **metrics
    ).to_tree()


def test_register_issues_fresh_distinct_uuids(service):
    a = service.register_agent("macos-activity", "x")
    b = service.register_agent("macos-activity", "x")
    assert a.secret_key != b.secret_key
    assert a.install_guid != b.install_guid
    assert a.secret_key != a.install_guid


def test_register_rejects_bad_code_name(service):
    with pytest.raises(ValidationError):
        service.register_agent("", "x")
    with pytest.raises(ValidationError):
        service.register_agent("bad\x00name", "x")


def test_registration_survives_restart(tmp_path, service, registered):
    fresh = RegistrationStore(tmp_path / "registrations.jsonl")
    assert fresh.verify(registered.secret_key, registered.install_guid)


def test_register_then_submit(service, registered):
    receipt = service.submit_events(
        registered.secret_key,
        registered.install_guid,
        [doc_for(registered, "e1")],
    )
    assert (receipt.accepted, receipt.duplicates, receipt.rejected) == (1, 0, [])


def test_resubmit_is_duplicate(service, registered):
    batch = [doc_for(registered, "e1")]
    service.submit_events(registered.secret_key, registered.install_guid, batch)
    receipt = service.submit_events(
        registered.secret_key, registered.install_guid, batch
    )
    assert (receipt.accepted, receipt.duplicates) == (0, 1)


def test_per_element_isolation(service, registered):
    bad = doc_for(registered, "e2")
    del bad["metrics"]
    batch = [doc_for(registered, "e1"), bad, doc_for(registered, "e3")]
    receipt = service.submit_events(
        registered.secret_key, registered.install_guid, batch
    )
    assert receipt.accepted == 2
    assert [r.index for r in receipt.rejected] == [1]
    assert receipt.rejected[0].errors[0].kind == ErrorKind.MISSING_FIELD
    assert receipt.total == 3


def test_credential_mismatch_element_rejected(service, registered):
    other = service.register_agent("other", "other")
    batch = [doc_for(other, "e1")]  # envelope carries other agent's creds
    receipt = service.submit_events(
        registered.secret_key, registered.install_guid, batch
    )
    assert receipt.accepted == 0
    assert receipt.rejected[0].errors[0].kind == ErrorKind.CREDENTIAL_MISMATCH


def test_unknown_credentials_refused(service, registered):
    with pytest.raises(AuthError):
        service.submit_events(
            registered.secret_key,
            "00000000-0000-4000-8000-000000000000",
            [doc_for(registered, "e1")],
        )
    assert service.store.record_count == 0


def test_batch_too_large(service, registered):
    batch = [doc_for(registered, f"e{i}") for i in range(1001)]
    with pytest.raises(BatchTooLargeError):
        service.submit_events(registered.secret_key, registered.install_guid, batch)


def test_pull_equals_direct_scan(service, registered):
    docs = [doc_for(registered, f"e{i}", when=ts(day=10 + i % 3)) for i in range(25)]
    service.submit_events(registered.secret_key, registered.install_guid, docs)
    direct, direct_cursor = service.store.scan("", 100)
    pulled, pulled_cursor = service.pull_events(READER_KEY, "", 100)
    assert pulled == direct and pulled_cursor == direct_cursor
    with pytest.raises(AuthError):
        service.pull_events("wrong", "", 10)


def test_health_counts_partitions(service, registered):
    assert service.health()["partition_count"] == 0
    service.submit_events(
        registered.secret_key, registered.install_guid, [doc_for(registered, "e1")]
    )
    health = service.health()
    assert health["partition_count"] == 1
    from metricshed import __version__

    assert health["version"] == __version__


# -- HTTP layer ----------------------------------------------------------------


@pytest.fixture
def web(service):
    return TestClient(build_app(service))


def register_http(web):
    response = web.post(
        "/api/v1/agents/register",
        json={"code_name": "http-agent", "full_name": "HTTP test agent"},
    )
    assert response.status_code == 200
    return response.json()


def test_http_register_and_submit(web, reference_doc):
    issued = register_http(web)
    reference_doc["agent"]["secret_key"] = issued["secret_key"]
    reference_doc["agent"]["install_guid"] = issued["install_guid"]
    response = web.post(
        "/api/v1/events:batch",
        json=[reference_doc],
        headers={
            "X-Secret-Key": issued["secret_key"],
            "X-Install-Guid": issued["install_guid"],
        },
    )
    assert response.status_code == 200
    assert response.json() == {"accepted": 1, "duplicates": 0, "rejected": []}


def test_http_401_leaves_store_unchanged(web, service, reference_doc):
    response = web.post(
        "/api/v1/events:batch",
        json=[reference_doc],
        headers={"X-Secret-Key": "nope", "X-Install-Guid": "nope"},
    )
    assert response.status_code == 401
    assert service.store.record_count == 0


def test_http_413_oversize_batch(web):
    issued = register_http(web)
    batch = [{"x": i} for i in range(1001)]
    response = web.post(
        "/api/v1/events:batch",
        json=batch,
        headers={
            "X-Secret-Key": issued["secret_key"],
            "X-Install-Guid": issued["install_guid"],
        },
    )
    assert response.status_code == 413


def test_http_pull_matches_scan(web, service, registered):
    docs = [doc_for(registered, f"e{i}", when=ts(day=10 + i % 4)) for i in range(30)]
    service.submit_events(registered.secret_key, registered.install_guid, docs)
    direct, _ = service.store.scan("", 100)
    response = web.get(
        "/api/v1/events",
        params={"limit": 100},
        headers={"X-Secret-Key": READER_KEY},
    )
    assert response.status_code == 200
    assert response.json()["records"] == [r.to_tree() for r in direct]


def test_http_pull_filters(web, service, registered):
    service.submit_events(
        registered.secret_key,
        registered.install_guid,
        [
            doc_for(registered, "a", event_type="activity"),
            doc_for(registered, "b", event_type="size"),
        ],
    )
    response = web.get(
        "/api/v1/events",
        params={"event_type": "size"},
        headers={"X-Secret-Key": READER_KEY},
    )
    records = response.json()["records"]
    assert [r["envelope"]["metrics"]["event_id"] for r in records] == ["b"]
    direct, _ = service.store.scan("", 100, ScanFilter(event_type="size"))
    assert records == [r.to_tree() for r in direct]


def test_http_bad_cursor_400(web):
    response = web.get(
        "/api/v1/events",
        params={"cursor": "###"},
        headers={"X-Secret-Key": READER_KEY},
    )
    assert response.status_code == 400


def test_http_health_open(web):
    response = web.get("/api/v1/health")
    assert response.status_code == 200
    assert response.json()["partition_count"] == 0


def test_http_stats_requires_reader(web):
    assert web.get("/api/v1/stats").status_code == 401
    response = web.get("/api/v1/stats", headers={"X-Secret-Key": READER_KEY})
    assert response.status_code == 200
    assert response.json()["record_count"] == 0
