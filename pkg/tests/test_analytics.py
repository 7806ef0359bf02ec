"""Aggregations vs brute-force group-by oracles."""

from __future__ import annotations

import random

import pytest

from metricshed.analytics import BadRangeError, breakdown, events_over_time
from metricshed.envelope import validate_envelope
from metricshed.store import Store

from .conftest import build_envelope, ts
from .oracles import oracle_breakdown, oracle_over_time


def series_tuples(series):
    return [(b.label, b.count, b.total_duration_s) for b in series.buckets]


def test_empty_store_zero_filled(tmp_path):
    with Store(tmp_path) as store:
        series = events_over_time(store, ts(day=10, hour=0), ts(day=13, hour=0))
        assert series_tuples(series) == [
            ("2016-11-10", 0, 0),
            ("2016-11-11", 0, 0),
            ("2016-11-12", 0, 0),
        ]


def test_reference_event_bucket(tmp_path, reference_doc):
    with Store(tmp_path) as store:
        store.append(validate_envelope(reference_doc))
        series = events_over_time(store, ts(day=15, hour=0), ts(day=16, hour=0))
        assert series_tuples(series) == [("2016-11-15", 1, 1800)]


def test_buckets_cover_partial_days(tmp_path):
    with Store(tmp_path) as store:
        series = events_over_time(store, ts(day=10, hour=5), ts(day=11, hour=1))
        assert [b.label for b in series.buckets] == ["2016-11-10", "2016-11-11"]


def test_bad_range(tmp_path):
    with Store(tmp_path) as store:
        with pytest.raises(BadRangeError):
            events_over_time(store, ts(day=12), ts(day=12))
        with pytest.raises(BadRangeError):
            events_over_time(store, ts(day=13), ts(day=12))
        with pytest.raises(BadRangeError):
            breakdown(store, "favorite_color", ts(day=10), ts(day=12))
        with pytest.raises(BadRangeError):
            events_over_time(store, ts(day=10), ts(day=12), granularity="hour")


def test_breakdown_counting(tmp_path):
    with Store(tmp_path) as store:
        store.append(build_envelope("a", event_type="web-browsing"))
        store.append(build_envelope("b", event_type="web-browsing"))
        store.append(build_envelope("c", event_type="vcs-commit"))
        series = breakdown(store, "event_type", ts(day=1, hour=0), ts(day=28, hour=0))
        assert series_tuples(series) == [
            ("vcs-commit", 1, 0),
            ("web-browsing", 2, 0),
        ]


def test_breakdown_none_bucket(tmp_path):
    with Store(tmp_path) as store:
        store.append(build_envelope("a"))
        store.append(build_envelope("b"))
        series = breakdown(store, "application", ts(day=1, hour=0), ts(day=28, hour=0))
        assert series_tuples(series) == [("(none)", 2, 0)]


def test_random_dataset_vs_oracle(tmp_path):
    rng = random.Random(31)
    types = ["activity", "size", "defect"]
    apps = ["editor", "browser", None]
    with Store(tmp_path, sync="off") as store:
        for i in range(300):
            metrics = {}
            if rng.random() < 0.7:
                metrics["event_duration"] = rng.randrange(1, 500)
            app = rng.choice(apps)
            if app:
                metrics["application"] = app
            if rng.random() < 0.5:
                metrics["host"] = {"host_name": f"h{rng.randrange(3)}"}
            store.append(
                build_envelope(
                    f"e{i}",
                    event_type=rng.choice(types),
                    when=ts(day=1 + rng.randrange(20), hour=rng.randrange(24)),
                    **metrics,
                )
            )
        records = list(store.scan_all())
        t0, t1 = ts(day=3, hour=0), ts(day=17, hour=0)
        series = events_over_time(store, t0, t1)
        assert series_tuples(series) == oracle_over_time(records, t0, t1)
        filtered = events_over_time(store, t0, t1, event_type="size")
        assert series_tuples(filtered) == oracle_over_time(
            records, t0, t1, event_type="size"
        )
        for dimension in ("event_type", "application", "host"):
            series = breakdown(store, dimension, t0, t1)
            assert series_tuples(series) == oracle_breakdown(records, dimension, t0, t1)
        # bucket counts sum to total matching documents
        total = sum(b.count for b in breakdown(store, "event_type", t0, t1).buckets)
        assert total == len(
            [r for r in records if t0 <= r.envelope.timestamp < t1]
        )
