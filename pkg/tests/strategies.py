"""Hypothesis strategies for documents, envelopes, and relational tables."""

from __future__ import annotations

import uuid
from datetime import datetime, timezone

from hypothesis import strategies as st

from metricshed.envelope import AgentDescriptor
from metricshed.unifier.mapping import COLUMN_TYPES, ColumnSpec, MappingSpec

EVENT_TYPES = ("activity", "size", "defect", "web-browsing", "vcs-commit")


def uuids():
    return st.integers(min_value=0, max_value=(1 << 128) - 1).map(
        lambda n: str(uuid.UUID(int=n))
    )


def instants(min_year: int = 2016, max_year: int = 2017):
    return st.builds(
        datetime,
        year=st.integers(min_year, max_year),
        month=st.integers(1, 12),
        day=st.integers(1, 28),
        hour=st.integers(0, 23),
        minute=st.integers(0, 59),
        second=st.integers(0, 59),
        microsecond=st.integers(0, 999).map(lambda ms: ms * 1000),
        tzinfo=st.just(timezone.utc),
    )


def scalars():
    return st.one_of(
        st.none(),
        st.booleans(),
        st.integers(min_value=-(10**12), max_value=10**12),
        st.floats(allow_nan=False, allow_infinity=False, width=64),
        st.text(max_size=20),
    )


def trees(max_depth: int = 3):
    return st.recursive(
        scalars(),
        lambda children: st.one_of(
            st.lists(children, max_size=4),
            st.dictionaries(st.text(min_size=1, max_size=8), children, max_size=4),
        ),
        max_leaves=12,
    )


def metrics_payloads():
    extra = st.dictionaries(
        st.text(min_size=1, max_size=10).filter(
            lambda k: k not in ("event_id", "event_type")
        ),
        trees(),
        max_size=5,
    )
    return st.builds(
        lambda eid, etype, rest: {"event_id": eid, "event_type": etype, **rest},
        st.text(
            alphabet="abcdef0123456789", min_size=4, max_size=24
        ),
        st.sampled_from(EVENT_TYPES),
        extra,
    )


def agent_descriptors():
    return st.builds(
        AgentDescriptor,
        code_name=st.text(min_size=1, max_size=30).filter(
            lambda s: all(ord(c) >= 0x20 and ord(c) != 0x7F for c in s)
        ),
        full_name=st.text(max_size=40),
        secret_key=uuids(),
        install_guid=uuids(),
    )


def envelope_trees():
    return st.builds(
        lambda when, agent, metrics: {
            "timestamp": when,
            "agent": agent.to_tree(),
            "metrics": metrics,
        },
        instants().map(lambda dt: dt.isoformat().replace("+00:00", "Z")),
        agent_descriptors(),
        metrics_payloads(),
    )


# -- relational tables for exporter tests --------------------------------

_nasty_text = st.text(
    alphabet=st.one_of(
        st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"),
        st.sampled_from(list(',"\'\n\r\t %{}\\?')),
    ),
    max_size=12,
)


def column_value(col_type: str):
    base = {
        "string": _nasty_text,
        "integer": st.integers(min_value=-(10**15), max_value=10**15),
        "real": st.floats(allow_nan=False, allow_infinity=False, width=64),
        "boolean": st.booleans(),
        "timestamp": instants(),
    }[col_type]
    return st.one_of(st.none(), base)


def column_names(prefix: str = "c"):
    return st.integers(0, 10**6).map(lambda n: f"{prefix}{n}")


def column_specs():
    return st.builds(
        ColumnSpec,
        name=column_names(),
        path=st.just("metrics.value"),
        type=st.sampled_from(sorted(COLUMN_TYPES)),
        required=st.booleans(),
    )


def tables(max_cols: int = 6, max_rows: int = 25):
    """Strategy producing (columns, rows) with rows as plain value dicts."""

    def build(cols, keys, draw_rows):
        rows = []
        for key, values in zip(keys, draw_rows):
            rows.append((key, dict(zip([c.name for c in cols], values))))
        return cols, rows

    cols = st.lists(
        column_specs(), min_size=1, max_size=max_cols, unique_by=lambda c: c.name
    )
    return cols.flatmap(
        lambda cs: st.builds(
            build,
            st.just(cs),
            st.lists(
                st.tuples(uuids(), st.text(alphabet="abcdef0123456789", min_size=4, max_size=12)),
                min_size=0,
                max_size=max_rows,
                unique=True,
            ),
            st.lists(
                st.tuples(*[column_value(c.type) for c in cs]),
                min_size=max_rows,
                max_size=max_rows,
            ),
        )
    )


def mapping_specs(table_name: str = "t"):
    paths = st.sampled_from(
        [
            "metrics.event_duration",
            "metrics.host.host_name",
            "metrics.user.username",
            "metrics.value",
            "metrics.flag",
            "metrics.when",
            "metrics.sample_metric_data[0]",
            "metrics.missing.leaf",
            "timestamp",
            "agent.code_name",
        ]
    )
    cols = st.lists(
        st.builds(
            ColumnSpec,
            name=column_names(),
            path=paths,
            type=st.sampled_from(sorted(COLUMN_TYPES)),
            required=st.booleans(),
        ),
        min_size=1,
        max_size=5,
        unique_by=lambda c: c.name,
    )
    return st.builds(
        MappingSpec,
        table=st.just(table_name),
        source_event_type=st.sampled_from(EVENT_TYPES),
        columns=cols.map(tuple),
    )
