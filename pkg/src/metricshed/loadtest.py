"""Write-path load generator: many synthetic agents against one collector.

Paced mode submits each agent's events in one batch per second at the
requested rate; max-rate mode pre-builds batches and pushes them as fast as
the server answers.  Request bodies are serialized before the clock starts so
the measurement covers the transport and the server, not the generator.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from typing import Any

from .agent.synthetic import synthetic_events
from .agent.transport import CollectorClient
from .envelope import AgentDescriptor


@dataclass
class LoadTestReport:
    attempted: int = 0
    accepted: int = 0
    duplicates: int = 0
    rejected: int = 0
    transport_errors: int = 0
    elapsed_s: float = 0.0
    latencies_ms: list[float] = field(default_factory=list)

    @property
    def events_per_s(self) -> float:
        return self.accepted / self.elapsed_s if self.elapsed_s > 0 else 0.0

    def percentile(self, q: float) -> float:
        if not self.latencies_ms:
            return 0.0
        ordered = sorted(self.latencies_ms)
        idx = min(len(ordered) - 1, max(0, round(q * (len(ordered) - 1))))
        return ordered[idx]

    def to_tree(self) -> dict[str, Any]:
        return {
            "attempted": self.attempted,
            "accepted": self.accepted,
            "duplicates": self.duplicates,
            "rejected": self.rejected,
            "transport_errors": self.transport_errors,
            "elapsed_s": round(self.elapsed_s, 3),
            "events_per_s": round(self.events_per_s, 1),
            "latency_ms": {
                "p50": round(self.percentile(0.50), 2),
                "p95": round(self.percentile(0.95), 2),
                "p99": round(self.percentile(0.99), 2),
            },
        }


def _register_agents(server_url: str, count: int) -> list[AgentDescriptor]:
    descriptors = []
    with CollectorClient(server_url) as client:
        for i in range(count):
            issued = client.register(f"load-agent-{i}", "Synthetic load agent")
            descriptors.append(
                AgentDescriptor(
                    code_name=issued["code_name"],
                    full_name=issued["full_name"],
                    secret_key=issued["secret_key"],
                    install_guid=issued["install_guid"],
                )
            )
    return descriptors


def _prepare_batches(
    agent: AgentDescriptor,
    agent_index: int,
    rate: float,
    duration: float,
    seed: int,
    batch_size: int | None,
) -> list[bytes]:
    events = synthetic_events(
        [agent], rate=rate, duration=duration, seed=seed,
        id_prefix=f"load-{seed}-{agent_index}",
    )
    trees = [ev.envelope.to_tree() for ev in events]
    size = batch_size or max(1, int(rate))
    return [
        json.dumps(trees[i : i + size], ensure_ascii=False).encode("utf-8")
        for i in range(0, len(trees), size)
    ]


def run_load_test(
    server_url: str,
    agents: int,
    rate: float,
    duration: float,
    seed: int,
    batch_size: int | None = None,
    max_rate: bool = False,
) -> LoadTestReport:
    """Drive agents*rate*duration envelopes at the server and measure."""
    descriptors = _register_agents(server_url, agents)
    prepared = [
        _prepare_batches(d, i, rate, duration, seed, batch_size)
        for i, d in enumerate(descriptors)
    ]
    report = LoadTestReport(attempted=int(rate * duration) * agents)
    lock = threading.Lock()
    start_barrier = threading.Barrier(agents + 1)
    seconds_per_batch = (batch_size or max(1, int(rate))) / rate

    def worker(agent: AgentDescriptor, batches: list[bytes]) -> None:
        import httpx

        headers = {
            "Content-Type": "application/json",
            "X-Secret-Key": agent.secret_key,
            "X-Install-Guid": agent.install_guid,
        }
        with httpx.Client(base_url=server_url, timeout=60.0) as client:
            start_barrier.wait()
            begin = time.monotonic()
            for i, body in enumerate(batches):
                if not max_rate:
                    # submit each slice of the schedule on schedule
                    target = begin + i * seconds_per_batch
                    now = time.monotonic()
                    if target > now:
                        time.sleep(target - now)
                t0 = time.monotonic()
                try:
                    response = client.post(
                        "/api/v1/events:batch", content=body, headers=headers
                    )
                    latency = (time.monotonic() - t0) * 1000
                    payload = response.json() if response.status_code == 200 else {}
                    with lock:
                        report.latencies_ms.append(latency)
                        if response.status_code == 200:
                            report.accepted += payload.get("accepted", 0)
                            report.duplicates += payload.get("duplicates", 0)
                            report.rejected += len(payload.get("rejected", []))
                        else:
                            report.transport_errors += 1
                except httpx.HTTPError:
                    with lock:
                        report.transport_errors += 1

    threads = [
        threading.Thread(target=worker, args=(d, b), daemon=True)
        for d, b in zip(descriptors, prepared)
    ]
    for t in threads:
        t.start()
    start_barrier.wait()
    begin = time.monotonic()
    for t in threads:
        t.join()
    report.elapsed_s = time.monotonic() - begin
    return report
