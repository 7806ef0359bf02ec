"""Single command-line entry point for every stage of the pipeline.

Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 partial rejection
(some batch elements were refused by the server).
"""

from __future__ import annotations

import json
import logging
import re
import sys
import uuid
from datetime import datetime, timezone
from pathlib import Path

import click

from . import __version__
from .agent.buffer import DEFAULT_CAP, EventBuffer
from .agent.filters import ReviewFilter
from .agent.review_server import DemoCollector, build_agent_app
from .agent.submit import submit_selected
from .agent.synthetic import DEFAULT_BASE_TIME, synthetic_events
from .agent.transport import CollectorClient, TransportError
from .agent.vcs import NotARepositoryError, run_vcs_agent
from .collector import AuthError, CollectorService, RegistrationStore
from .config import load_config_file, resolve, write_config_file
from .envelope import AgentDescriptor, ValidationError
from .exporter import export_arff, export_csv
from .loadtest import run_load_test
from .server import build_app
from .store import Store
from .timeutil import parse_instant
from .unifier.mapping import MappingError, parse_mapping_file
from .unifier.run import HttpSource, run_unify
from .unifier.sink import FileSink, SinkUnavailableError, UnknownTableError

EXIT_ERROR = 1
EXIT_PARTIAL = 3


def _parse_point(value: str | None) -> datetime | None:
    """Accept a full instant or a bare date (midnight UTC)."""
    if not value:
        return None
    if re.fullmatch(r"\d{4}-\d{2}-\d{2}", value):
        value = f"{value}T00:00:00.000Z"
    return parse_instant(value)


def _parse_listen(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise click.UsageError(f"bad listen address {value!r}, expected host:port")
    return host, int(port)


def _echo_json(payload) -> None:
    click.echo(json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2))


class Ctx:
    def __init__(self, config_path: str | None):
        self.file_values = load_config_file(config_path)

    def get(self, key: str, flag: str | None = None, default: str | None = None):
        return resolve(key, flag, self.file_values, default)

    def require(self, key: str, flag: str | None = None) -> str:
        value = self.get(key, flag)
        if value is None:
            raise click.UsageError(
                f"{key} is required (flag, METRICSHED_{key.upper()}, or config file)"
            )
        return value

    def agent_descriptor(self) -> AgentDescriptor:
        return AgentDescriptor(
            code_name=self.require("code_name"),
            full_name=self.get("full_name", default="") or "",
            secret_key=self.require("secret_key"),
            install_guid=self.require("install_guid"),
        )

    def open_buffer(self, flag: str | None = None) -> EventBuffer:
        path = self.require("buffer_path", flag)
        cap = int(self.get("buffer_cap", default=str(DEFAULT_CAP)))
        return EventBuffer(path, cap=cap)

    def client(self, server_flag: str | None = None, need_creds: bool = True) -> CollectorClient:
        url = self.require("server_url", server_flag)
        return CollectorClient(
            url,
            secret_key=self.get("secret_key") if need_creds else None,
            install_guid=self.get("install_guid") if need_creds else None,
            reader_key=self.get("reader_key"),
        )


@click.group()
@click.version_option(version=__version__)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              envvar="METRICSHED_CONFIG", help="Config file (key = value lines).")
@click.pass_context
def main(ctx: click.Context, config: str | None) -> None:
    """Collect, store, unify, and analyze software process events."""
    ctx.obj = Ctx(config)


# -- collector ----------------------------------------------------------------


@main.command()
@click.option("--listen", default=None, help="host:port (default 127.0.0.1:8477)")
@click.option("--data-dir", default=None, type=click.Path(file_okay=False))
@click.option("--reader-key", default=None, help="Reader credential; generated and persisted if absent.")
@click.option("--ui-dir", default=None, type=click.Path(file_okay=False), help="Static UI directory to serve under /ui.")
@click.option("--sync", default="batch", type=click.Choice(["always", "batch", "off"]))
@click.option("--log-level", default=None)
@click.pass_obj
def serve(obj: Ctx, listen, data_dir, reader_key, ui_dir, sync, log_level) -> None:
    """Run the collector server."""
    import uvicorn

    host, port = _parse_listen(obj.get("listen", listen, "127.0.0.1:8477"))
    data_root = Path(obj.require("data_dir", data_dir))
    data_root.mkdir(parents=True, exist_ok=True)
    level = (obj.get("log_level", log_level, "info") or "info").lower()
    logging.basicConfig(level=level.upper())

    key = obj.get("reader_key", reader_key)
    key_file = data_root / "reader.key"
    if key is None:
        if key_file.exists():
            key = key_file.read_text(encoding="utf-8").strip()
        else:
            key = str(uuid.uuid4())
            key_file.write_text(key, encoding="utf-8")
            click.echo(f"reader key generated and stored in {key_file}")

    store = Store(data_root, sync=sync)
    registrations = RegistrationStore(data_root / "registrations.jsonl")
    service = CollectorService(store, registrations, key)
    app = build_app(service, ui_dir=ui_dir)
    click.echo(f"collector listening on http://{host}:{port} (data in {data_root})")
    uvicorn.run(app, host=host, port=port, log_level="warning", access_log=False)


@main.command()
@click.option("--server", default=None, help="Collector base URL.")
@click.option("--code-name", required=True)
@click.option("--full-name", default="")
@click.option("--save-to", type=click.Path(dir_okay=False), default=None,
              help="Write a config file with the issued credentials.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def register(obj: Ctx, server, code_name, full_name, save_to, as_json) -> None:
    """Register an agent installation and obtain credentials."""
    with obj.client(server, need_creds=False) as client:
        issued = client.register(code_name, full_name)
    if as_json:
        _echo_json(issued)
    else:
        click.echo(f"code_name:    {issued['code_name']}")
        click.echo(f"secret_key:   {issued['secret_key']}")
        click.echo(f"install_guid: {issued['install_guid']}")
    if save_to:
        write_config_file(
            save_to,
            {
                "server_url": obj.require("server_url", server),
                "code_name": issued["code_name"],
                "full_name": issued["full_name"],
                "secret_key": issued["secret_key"],
                "install_guid": issued["install_guid"],
            },
        )
        click.echo(f"credentials saved to {save_to}", err=True)


# -- agent ---------------------------------------------------------------------


@main.group()
def agent() -> None:
    """Local collection agent commands."""


@agent.group()
def run() -> None:
    """Run a reference agent against the local buffer."""


@run.command("vcs")
@click.option("--repo", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--since", default=None, help="Only commits after this instant/date.")
@click.pass_obj
def run_vcs(obj: Ctx, repo, since) -> None:
    """Record one event per commit of a git repository."""
    with obj.open_buffer() as buffer:
        try:
            count = run_vcs_agent(
                buffer, obj.agent_descriptor(), repo, since=_parse_point(since)
            )
        except NotARepositoryError as exc:
            raise click.ClickException(str(exc))
    click.echo(f"recorded {count} new events")


@run.command("synthetic")
@click.option("--agents", "n_agents", default=1, show_default=True)
@click.option("--rate", default=1.0, show_default=True, help="Events per second per agent.")
@click.option("--duration", default=10.0, show_default=True, help="Schedule length in seconds.")
@click.option("--seed", default=0, show_default=True)
@click.option("--base-time", default=None, help="Instant for the first event; 'now' or ISO (default fixed).")
@click.pass_obj
def run_synthetic(obj: Ctx, n_agents, rate, duration, seed, base_time) -> None:
    """Record a deterministic synthetic event stream."""
    descriptor = obj.agent_descriptor()
    if base_time == "now":
        base = datetime.now(timezone.utc)
    else:
        base = _parse_point(base_time) or DEFAULT_BASE_TIME
    events = synthetic_events(
        [descriptor] * n_agents, rate=rate, duration=duration, seed=seed, base_time=base
    )
    recorded = 0
    with obj.open_buffer() as buffer:
        from .agent.buffer import DuplicateEventError

        for ev in events:
            try:
                buffer.record(ev.envelope)
                recorded += 1
            except DuplicateEventError:
                pass
    click.echo(f"recorded {recorded} new events")


@agent.command("list")
@click.option("--keyword", default=None)
@click.option("--application", default=None)
@click.option("--from", "ts_from", default=None)
@click.option("--to", "ts_to", default=None)
@click.option("--state", default=None, type=click.Choice(["pending", "submitted"]))
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def agent_list(obj: Ctx, keyword, application, ts_from, ts_to, state, as_json) -> None:
    """List buffered events matching the review filter."""
    flt = ReviewFilter(
        keyword=keyword,
        application=application,
        ts_from=_parse_point(ts_from),
        ts_to=_parse_point(ts_to),
        state=state,
    )
    with obj.open_buffer() as buffer:
        events = buffer.list_events(flt)
    if as_json:
        _echo_json([ev.to_tree() for ev in events])
        return
    for ev in events:
        env = ev.envelope
        click.echo(
            f"{env.event_id}  {ev.state:9s}  {env.to_tree()['timestamp']}  "
            f"{env.event_type}  {env.metrics.get('application', '-')}"
        )
    click.echo(f"{len(events)} events")


@agent.command("submit")
@click.option("--ids", default=None, help="Comma-separated event ids.")
@click.option("--all-pending", is_flag=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def agent_submit(obj: Ctx, ids, all_pending, as_json) -> None:
    """Submit selected pending events to the collector."""
    if bool(ids) == all_pending:
        raise click.UsageError("use exactly one of --ids or --all-pending")
    with obj.open_buffer() as buffer:
        selected = buffer.pending_ids() if all_pending else [
            part.strip() for part in ids.split(",") if part.strip()
        ]
        if not selected:
            click.echo("nothing pending")
            return
        with obj.client() as client:
            try:
                receipt = submit_selected(buffer, selected, client)
            except TransportError as exc:
                raise click.ClickException(f"transport failure, nothing submitted: {exc}")
            except AuthError as exc:
                raise click.ClickException(f"unauthorized: {exc}")
    if as_json:
        _echo_json(receipt.to_tree())
    else:
        click.echo(
            f"accepted {receipt.accepted}, duplicates {receipt.duplicates}, "
            f"rejected {len(receipt.rejected)}"
        )
    if receipt.rejected:
        sys.exit(EXIT_PARTIAL)


@agent.command("review-server")
@click.option("--listen", default="127.0.0.1:8478", show_default=True)
@click.option("--demo-rate", default=None, type=float,
              help="Record synthetic events at this rate while collection is on.")
@click.pass_obj
def review_server(obj: Ctx, listen, demo_rate) -> None:
    """Serve the local review endpoint the web UI talks to."""
    import uvicorn

    host, port = _parse_listen(listen)
    buffer = obj.open_buffer()
    client = obj.client()
    demo = None
    if demo_rate:
        demo = DemoCollector(buffer, obj.agent_descriptor(), rate=demo_rate)
    app = build_agent_app(buffer, client, demo=demo)
    click.echo(f"agent review endpoint on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning", access_log=False)


# -- unify / export ----------------------------------------------------------------


@main.command()
@click.option("--mapping", "mapping_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--sink", "sink_dir", default=None, type=click.Path(file_okay=False))
@click.option("--server", default=None)
@click.option("--once/--follow", default=True)
@click.option("--batch-limit", default=500, show_default=True)
@click.option("--interval", default=2.0, show_default=True, help="Poll interval for --follow.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def unify(obj: Ctx, mapping_path, sink_dir, server, once, batch_limit, interval, as_json) -> None:
    """Project stored documents into a relational table via a mapping file."""
    import time as _time

    try:
        mapping = parse_mapping_file(mapping_path)
    except MappingError as exc:
        raise click.ClickException(f"bad mapping: {exc}")
    sink = FileSink(obj.require("sink_dir", sink_dir))
    with obj.client(server, need_creds=False) as client:
        source = HttpSource(client)
        try:
            while True:
                checkpoint, report = run_unify(
                    mapping, source, sink, batch_limit=batch_limit
                )
                if once:
                    break
                _time.sleep(interval)
        except (TransportError, SinkUnavailableError) as exc:
            raise click.ClickException(str(exc))
    if as_json:
        _echo_json({"checkpoint": checkpoint.to_tree(), "run": report.to_tree()})
    else:
        click.echo(
            f"{report.emitted} rows into {mapping.table} "
            f"({report.quarantined} quarantined, {report.skipped} skipped)"
        )


@main.command()
@click.option("--table", required=True)
@click.option("--format", "fmt", required=True, type=click.Choice(["csv", "arff"]))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--relation", default=None, help="ARFF relation name (default: table).")
@click.option("--sink", "sink_dir", default=None, type=click.Path(exists=True, file_okay=False))
@click.pass_obj
def export(obj: Ctx, table, fmt, out, relation, sink_dir) -> None:
    """Export a unified table as CSV or ARFF."""
    sink = FileSink(obj.require("sink_dir", sink_dir))
    try:
        rows = sink.read_table(table)
        columns = sink.table_columns(table)
    except UnknownTableError:
        raise click.ClickException(f"no such table {table!r}")
    if fmt == "csv":
        payload = export_csv(rows, columns)
    else:
        payload = export_arff(rows, columns, relation or table)
    try:
        Path(out).write_bytes(payload)
    except OSError as exc:
        raise click.ClickException(f"cannot write {out}: {exc}")
    click.echo(f"wrote {len(rows)} rows to {out}")


# -- load test -----------------------------------------------------------------


@main.command("load-test")
@click.option("--agents", "n_agents", default=50, show_default=True)
@click.option("--rate", default=10.0, show_default=True, help="Events per second per agent.")
@click.option("--duration", default=10.0, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--server", default=None)
@click.option("--batch-size", default=None, type=int)
@click.option("--max-rate", is_flag=True, help="Ignore pacing; push as fast as the server answers.")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def load_test(obj: Ctx, n_agents, rate, duration, seed, server, batch_size, max_rate, as_json) -> None:
    """Drive synthetic agents at a collector and report write throughput."""
    url = obj.require("server_url", server)
    try:
        report = run_load_test(
            url, agents=n_agents, rate=rate, duration=duration, seed=seed,
            batch_size=batch_size, max_rate=max_rate,
        )
    except (TransportError, AuthError, ValidationError) as exc:
        raise click.ClickException(str(exc))
    if as_json:
        _echo_json(report.to_tree())
    else:
        tree = report.to_tree()
        click.echo(
            f"attempted {tree['attempted']}, accepted {tree['accepted']}, "
            f"duplicates {tree['duplicates']}, rejected {tree['rejected']}"
        )
        click.echo(
            f"elapsed {tree['elapsed_s']}s, {tree['events_per_s']} accepted/s, "
            f"latency p50 {tree['latency_ms']['p50']}ms "
            f"p95 {tree['latency_ms']['p95']}ms p99 {tree['latency_ms']['p99']}ms"
        )
    if report.transport_errors:
        sys.exit(EXIT_ERROR)
    if report.rejected:
        sys.exit(EXIT_PARTIAL)


if __name__ == "__main__":
    main()
