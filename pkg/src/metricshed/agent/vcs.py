"""Reference agent that mines commit metadata out of a git working copy.

One event per commit, event_type ``vcs-commit``, event_id = commit hash, so
re-runs are naturally idempotent against both the local buffer and the
server-side dedup.  Only git is supported for now; other systems would slot
in behind the same record-per-commit shape.
"""

from __future__ import annotations

import subprocess
from datetime import datetime, timezone
from pathlib import Path

from ..envelope import AgentDescriptor, make_envelope
from ..timeutil import truncate_ms
from .buffer import DuplicateEventError, EventBuffer

_RS = "\x1e"  # record separator
_FS = "\x1f"  # field separator


class NotARepositoryError(ValueError):
    pass


def _git(repo: Path, *args: str) -> str:
    proc = subprocess.run(
        ["git", "-C", str(repo), *args],
        capture_output=True,
        text=True,
    )
    if proc.returncode != 0:
        raise RuntimeError(f"git {' '.join(args)} failed: {proc.stderr.strip()}")
    return proc.stdout


def _parse_log(output: str) -> list[dict]:
    commits = []
    for chunk in output.split(_RS):
        chunk = chunk.strip("\n")
        if not chunk:
            continue
        # layout: hash FS author FS date FS body FS [newline + numstat block]
        parts = chunk.split(_FS)
        if len(parts) < 5:
            continue
        commit_id, author, committed_at = parts[0], parts[1], parts[2]
        message = _FS.join(parts[3:-1])
        numstat = parts[-1]
        files_changed = insertions = deletions = 0
        for line in numstat.splitlines():
            parts = line.split("\t")
            if len(parts) != 3:
                continue
            files_changed += 1
            if parts[0] != "-":
                insertions += int(parts[0])
            if parts[1] != "-":
                deletions += int(parts[1])
        commits.append(
            {
                "commit_id": commit_id,
                "author": author,
                "committed_at": committed_at,
                "message_length": len(message),
                "files_changed": files_changed,
                "insertions": insertions,
                "deletions": deletions,
            }
        )
    return commits


def run_vcs_agent(
    buffer: EventBuffer,
    agent: AgentDescriptor,
    repo_path: str | Path,
    since: datetime | None = None,
) -> int:
    """Record one pending event per commit; returns how many were new."""
    repo = Path(repo_path)
    probe = subprocess.run(
        ["git", "-C", str(repo), "rev-parse", "--is-inside-work-tree"],
        capture_output=True,
        text=True,
    )
    if probe.returncode != 0 or probe.stdout.strip() != "true":
        raise NotARepositoryError(f"{repo} is not a git working copy")

    head = subprocess.run(
        ["git", "-C", str(repo), "rev-parse", "--verify", "HEAD"],
        capture_output=True,
        text=True,
    )
    if head.returncode != 0:
        return 0  # repository without commits

    args = [
        "log",
        f"--pretty=format:{_RS}%H{_FS}%an{_FS}%cI{_FS}%B{_FS}",
        "--numstat",
        "--reverse",
    ]
    if since is not None:
        args.append(f"--since={since.isoformat()}")
    output = _git(repo, *args)

    recorded = 0
    for commit in _parse_log(output):
        committed_at = truncate_ms(
            datetime.fromisoformat(commit.pop("committed_at")).astimezone(timezone.utc)
        )
        envelope = make_envelope(
            agent=agent,
            timestamp=committed_at,
            event_id=commit["commit_id"],
            event_type="vcs-commit",
            metrics={"application": "git", **commit},
        )
        try:
            buffer.record(envelope)
        except DuplicateEventError:
            continue
        recorded += 1
    return recorded
