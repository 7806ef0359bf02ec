"""Review filters over locally buffered events.

Keyword search covers string leaves of the metrics tree only (values, not
keys, not numbers) as a case-insensitive substring; application matches the
reserved ``metrics.application`` path exactly; time ranges are half-open
over the envelope timestamp.  Provided fields are summed as a conjunction,
so the empty filter matches everything.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import TYPE_CHECKING, Any, Iterator

if TYPE_CHECKING:
    from .buffer import LocalEvent


def string_leaves(tree: Any) -> Iterator[str]:
    if isinstance(tree, str):
        yield tree
    elif isinstance(tree, dict):
        for value in tree.values():
            yield from string_leaves(value)
    elif isinstance(tree, list):
        for value in tree:
            yield from string_leaves(value)


@dataclass(frozen=True)
class ReviewFilter:
    keyword: str | None = None
    application: str | None = None
    ts_from: datetime | None = None
    ts_to: datetime | None = None
    state: str | None = None

    def matches(self, event: "LocalEvent") -> bool:
        env = event.envelope
        if self.keyword is not None:
            needle = self.keyword.lower()
            if not any(needle in leaf.lower() for leaf in string_leaves(env.metrics)):
                return False
        if self.application is not None:
            if env.metrics.get("application") != self.application:
                return False
        if self.ts_from is not None and env.timestamp < self.ts_from:
            return False
        if self.ts_to is not None and env.timestamp >= self.ts_to:
            return False
        if self.state is not None and event.state != self.state:
            return False
        return True
