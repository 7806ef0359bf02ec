"""Transports that move batches from an agent to a collector.

CollectorClient speaks the HTTP API; LocalTransport wraps an in-process
CollectorService with the same surface, which keeps tests and fault-injection
wrappers honest: everything above this layer is transport-agnostic.
"""

from __future__ import annotations

import json
from datetime import datetime
from typing import Any

import httpx

from ..collector import AuthError, CollectorService, SubmitReceipt
from ..store import ScanFilter, StoredRecord
from ..timeutil import format_instant


class TransportError(Exception):
    """The collector could not be reached or did not answer; retryable."""


class CollectorClient:
    def __init__(
        self,
        base_url: str,
        secret_key: str | None = None,
        install_guid: str | None = None,
        reader_key: str | None = None,
        timeout: float = 30.0,
    ):
        self.base_url = base_url.rstrip("/")
        self.secret_key = secret_key
        self.install_guid = install_guid
        self.reader_key = reader_key
        self._client = httpx.Client(base_url=self.base_url, timeout=timeout)

    # -- plumbing -------------------------------------------------------------

    def _request(self, method: str, path: str, **kwargs) -> httpx.Response:
        try:
            response = self._client.request(method, path, **kwargs)
        except httpx.HTTPError as exc:
            raise TransportError(f"{method} {path}: {exc}") from exc
        if response.status_code >= 500:
            raise TransportError(f"{method} {path}: server error {response.status_code}")
        if response.status_code == 401:
            raise AuthError(response.json().get("error", "unauthorized"))
        if response.status_code >= 400:
            raise ValueError(f"{method} {path}: {response.status_code} {response.text}")
        return response

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "CollectorClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- API ---------------------------------------------------------------

    def register(self, code_name: str, full_name: str) -> dict[str, str]:
        response = self._request(
            "POST",
            "/api/v1/agents/register",
            json={"code_name": code_name, "full_name": full_name},
        )
        return response.json()

    def submit(self, batch: list[dict[str, Any]]) -> SubmitReceipt:
        response = self._request(
            "POST",
            "/api/v1/events:batch",
            content=json.dumps(batch, ensure_ascii=False).encode("utf-8"),
            headers={
                "Content-Type": "application/json",
                "X-Secret-Key": self.secret_key or "",
                "X-Install-Guid": self.install_guid or "",
            },
        )
        return SubmitReceipt.from_tree(response.json())

    def pull(
        self,
        cursor: str = "",
        limit: int = 100,
        install_guid: str | None = None,
        event_type: str | None = None,
        ts_from: datetime | None = None,
        ts_to: datetime | None = None,
    ) -> tuple[list[StoredRecord], str]:
        params: dict[str, Any] = {"cursor": cursor, "limit": limit}
        if install_guid:
            params["install_guid"] = install_guid
        if event_type:
            params["event_type"] = event_type
        if ts_from:
            params["from"] = format_instant(ts_from)
        if ts_to:
            params["to"] = format_instant(ts_to)
        response = self._request(
            "GET",
            "/api/v1/events",
            params=params,
            headers={"X-Secret-Key": self.reader_key or ""},
        )
        payload = response.json()
        records = [StoredRecord.from_tree(t) for t in payload["records"]]
        return records, payload["next_cursor"]

    def health(self) -> dict[str, Any]:
        return self._request("GET", "/api/v1/health").json()

    def stats(self) -> dict[str, Any]:
        return self._request(
            "GET", "/api/v1/stats", headers={"X-Secret-Key": self.reader_key or ""}
        ).json()


class LocalTransport:
    """In-process transport over a CollectorService (tests, embedded use)."""

    def __init__(
        self,
        service: CollectorService,
        secret_key: str | None = None,
        install_guid: str | None = None,
        reader_key: str | None = None,
    ):
        self.service = service
        self.secret_key = secret_key
        self.install_guid = install_guid
        self.reader_key = reader_key

    def register(self, code_name: str, full_name: str) -> dict[str, str]:
        return self.service.register_agent(code_name, full_name).to_tree()

    def submit(self, batch: list[dict[str, Any]]) -> SubmitReceipt:
        return self.service.submit_events(self.secret_key, self.install_guid, batch)

    def pull(
        self,
        cursor: str = "",
        limit: int = 100,
        install_guid: str | None = None,
        event_type: str | None = None,
        ts_from: datetime | None = None,
        ts_to: datetime | None = None,
    ) -> tuple[list[StoredRecord], str]:
        flt = ScanFilter(
            install_guid=install_guid,
            event_type=event_type,
            ts_from=ts_from,
            ts_to=ts_to,
        )
        return self.service.pull_events(self.reader_key, cursor, limit, flt)

    def health(self) -> dict[str, Any]:
        return self.service.health()

    def stats(self) -> dict[str, Any]:
        return self.service.stats(self.reader_key)
