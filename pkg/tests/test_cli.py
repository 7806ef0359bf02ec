"""CLI subcommands end to end, including golden --json output."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from metricshed.agent.buffer import EventBuffer
from metricshed.cli import main
from metricshed.envelope import AgentDescriptor

from .conftest import READER_KEY, build_envelope, ts

GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def runner():
    return CliRunner()


def invoke(runner, *args, env=None):
    return runner.invoke(main, list(args), env=env or {}, catch_exceptions=False)


def write_config(path, **values):
    lines = [f"{k} = {v}" for k, v in values.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def register_via_cli(runner, tmp_path, live_server, buffer_name="buffer.log"):
    config = tmp_path / "agent.conf"
    result = invoke(
        runner,
        "register",
        "--server",
        live_server.url,
        "--code-name",
        "cli-agent",
        "--full-name",
        "CLI test agent",
        "--save-to",
        str(config),
        "--json",
    )
    assert result.exit_code == 0, result.output
    issued = json.loads(result.output[: result.output.rindex("}") + 1])
    # extend the saved config with local paths
    extra = (
        f"buffer_path = {tmp_path / buffer_name}\n"
        f"reader_key = {READER_KEY}\n"
        f"sink_dir = {tmp_path / 'sink'}\n"
    )
    config.write_text(config.read_text() + extra, encoding="utf-8")
    return config, issued


def test_register_and_synthetic_and_submit(runner, tmp_path, live_server):
    config, issued = register_via_cli(runner, tmp_path, live_server)

    result = invoke(
        runner, "--config", str(config),
        "agent", "run", "synthetic", "--agents", "2", "--rate", "2", "--duration", "3", "--seed", "5",
    )
    assert result.exit_code == 0
    assert "recorded 12 new events" in result.output

    # re-run is idempotent locally
    result = invoke(
        runner, "--config", str(config),
        "agent", "run", "synthetic", "--agents", "2", "--rate", "2", "--duration", "3", "--seed", "5",
    )
    assert "recorded 0 new events" in result.output

    result = invoke(runner, "--config", str(config), "agent", "submit", "--all-pending")
    assert result.exit_code == 0, result.output
    assert "accepted 12" in result.output
    assert live_server.store.record_count == 12

    # resubmission finds nothing pending
    result = invoke(runner, "--config", str(config), "agent", "submit", "--all-pending")
    assert "nothing pending" in result.output


def test_agent_list_golden(runner, tmp_path):
    buffer_path = tmp_path / "buffer.log"
    with EventBuffer(buffer_path) as buf:
        buf.record(
            build_envelope(
                "golden-1",
                event_type="web-browsing",
                when=ts(day=15, hour=13, minute=25, second=43, ms=511),
                application="browser",
                sample_metric_data=["stackoverflow.com", "google.com"],
            ),
            created_at=ts(day=15, hour=14),
        )
        buf.record(
            build_envelope(
                "golden-2",
                event_type="vcs-commit",
                when=ts(day=16, hour=9),
                author="dev",
            ),
            created_at=ts(day=16, hour=10),
        )
    config = tmp_path / "agent.conf"
    write_config(config, buffer_path=buffer_path)

    result = invoke(
        runner, "--config", str(config),
        "agent", "list", "--keyword", "stackoverflow", "--json",
    )
    assert result.exit_code == 0
    got = json.loads(result.output)
    assert [e["envelope"]["metrics"]["event_id"] for e in got] == ["golden-1"]

    result = invoke(runner, "--config", str(config), "agent", "list", "--json")
    expected = (GOLDEN / "agent_list.json").read_text(encoding="utf-8")
    assert result.output == expected

    # filters through the CLI surface
    result = invoke(
        runner, "--config", str(config),
        "agent", "list", "--from", "2016-11-16", "--json",
    )
    got = json.loads(result.output)
    assert [e["envelope"]["metrics"]["event_id"] for e in got] == ["golden-2"]


def test_unify_and_export_cli(runner, tmp_path, live_server):
    config, issued = register_via_cli(runner, tmp_path, live_server)
    agent = AgentDescriptor(
        code_name=issued["code_name"],
        full_name=issued["full_name"],
        secret_key=issued["secret_key"],
        install_guid=issued["install_guid"],
    )
    with EventBuffer(tmp_path / "buffer.log") as buf:
        buf.record(build_envelope("w1", agent=agent, event_type="web-browsing",
                                  event_duration=1800, host={"host_name": "lab5_pc1"}))
        buf.record(build_envelope("w2", agent=agent, event_type="web-browsing",
                                  event_duration=60, host={"host_name": "lab5_pc2"}))
        buf.record(build_envelope("a1", agent=agent, event_type="activity"))
    result = invoke(runner, "--config", str(config), "agent", "submit", "--all-pending")
    assert result.exit_code == 0, result.output

    mapping = tmp_path / "browsing.map"
    mapping.write_text(
        "table browsing\n"
        "source web-browsing\n"
        "column duration_s metrics.event_duration integer required\n"
        "column host metrics.host.host_name string\n",
        encoding="utf-8",
    )
    result = invoke(
        runner, "--config", str(config),
        "unify", "--mapping", str(mapping), "--once", "--json",
    )
    assert result.exit_code == 0, result.output
    summary = json.loads(result.output)
    assert summary["run"]["emitted"] == 2
    assert summary["run"]["skipped"] == 1

    out_csv = tmp_path / "browsing.csv"
    result = invoke(
        runner, "--config", str(config),
        "export", "--table", "browsing", "--format", "csv", "--out", str(out_csv),
    )
    assert result.exit_code == 0, result.output
    lines = out_csv.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "duration_s,host"
    assert len(lines) == 3

    out_arff = tmp_path / "browsing.arff"
    result = invoke(
        runner, "--config", str(config),
        "export", "--table", "browsing", "--format", "arff", "--out", str(out_arff),
    )
    assert result.exit_code == 0
    assert out_arff.read_text(encoding="utf-8").startswith("@relation browsing")

    result = invoke(
        runner, "--config", str(config),
        "export", "--table", "missing", "--format", "csv", "--out", str(tmp_path / "x.csv"),
    )
    assert result.exit_code == 1


def test_unify_empty_server(runner, tmp_path, live_server):
    config, _ = register_via_cli(runner, tmp_path, live_server)
    mapping = tmp_path / "browsing.map"
    mapping.write_text(
        "table browsing\nsource web-browsing\n"
        "column duration_s metrics.event_duration integer\n",
        encoding="utf-8",
    )
    result = invoke(
        runner, "--config", str(config), "unify", "--mapping", str(mapping), "--once"
    )
    assert result.exit_code == 0
    assert "0 rows" in result.output


def test_submit_partial_rejection_exit_code(runner, tmp_path, live_server):
    config, issued = register_via_cli(runner, tmp_path, live_server)
    agent = AgentDescriptor(
        code_name=issued["code_name"],
        full_name=issued["full_name"],
        secret_key=issued["secret_key"],
        install_guid=issued["install_guid"],
    )
    with EventBuffer(tmp_path / "buffer.log") as buf:
        buf.record(build_envelope("ok", agent=agent))
        # wrong embedded credentials: the server rejects this element only
        buf.record(build_envelope("bad"))
    result = runner.invoke(
        main, ["--config", str(config), "agent", "submit", "--all-pending"]
    )
    assert result.exit_code == 3
    assert "rejected 1" in result.output


def test_usage_errors(runner, tmp_path):
    result = runner.invoke(main, ["agent", "submit"])
    assert result.exit_code == 2
    result = runner.invoke(main, ["agent", "list"])
    assert result.exit_code == 2  # buffer_path unset
