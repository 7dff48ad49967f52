import json
import threading

import filelock
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_record, make_result
from micose.errors import DuplicateRecordError, SchemaError, StoreLockedError
from micose.store import (
    ARCHITECTURAL_LEVELS, CHANGE_CATEGORIES, ChangesetRecord, HistoryStore, PouResult,
    validate_record,
)


def test_round_trip(store):
    rec = make_record("c1", {"FB_A": {"if-added": 0.2}}, category="Feature", phase="Design")
    store.append(rec)
    (back,) = store.records()
    assert back == rec
    with open(store.path) as fh:
        assert json.loads(fh.readline())["v"] == 1


def test_duplicate_rejected_and_file_unchanged(store):
    store.append(make_record("c1", {"A": {"if-added": 0.1}}))
    content = open(store.path, "rb").read()
    with pytest.raises(DuplicateRecordError):
        store.append(make_record("c1", {"A": {"if-added": 0.3}}))
    assert open(store.path, "rb").read() == content


def test_torn_tail_ignored_then_repaired(store):
    store.append(make_record("c1", {"A": {"if-added": 0.1}}))
    with open(store.path, "ab") as fh:
        fh.write(b'{"changeset_id": "c2", "v"')
    assert store.ids() == ["c1"]
    store.append(make_record("c3", {"A": {"if-added": 0.1}}))
    assert store.ids() == ["c1", "c3"]
    assert all(json.loads(line) for line in open(store.path))


def test_locked_store_raises(tmp_path):
    store = HistoryStore(str(tmp_path / "h.jsonl"), lock_timeout=0.1)
    held = filelock.FileLock(store.lock_path)
    acquired, release = threading.Event(), threading.Event()

    def holder():
        with held:
            acquired.set()
            release.wait(5)

    t = threading.Thread(target=holder)
    t.start()
    acquired.wait(5)
    try:
        with pytest.raises(StoreLockedError):
            store.append(make_record("c1", {"A": {"if-added": 0.1}}))
    finally:
        release.set()
        t.join()
    assert store.records() == []


def test_history_excludes_no_change_and_baselines(store):
    store.append(ChangesetRecord("c0", "2024-01-01T00:00:00+00:00", "dev", pou_results={
        "A": PouResult(make_result({}), baseline=True)}))
    store.append(make_record("c1", {"A": {"if-added": 0.1}}))
    store.append(make_record("c2", {"A": {}}))                     # comment-only
    store.append(make_record("c3", {"A": {"if-added": 0.3}, "B": {"if-added": 0.2}}))
    hist = store.history("a")
    assert [e.change_number for e in hist] == [1, 2]
    assert [e.record.changeset_id for e in hist] == ["c1", "c3"]
    assert [e.record.changeset_id for e in store.history("B")] == ["c3"]


def test_unknown_pou_gives_empty_history(store):
    store.append(make_record("c1", {"A": {"if-added": 0.1}}))
    assert len(store.history("Nope")) == 0


def test_query_filters_and_level_overlap(store):
    store.append(make_record("c1", {"A": ({"if-added": 0.1}, "Machine"),
                                    "B": ({"if-added": 0.1}, "Station")}, category="Feature"))
    store.append(make_record("c2", {"A": ({"if-added": 0.1}, "Machine")}, category="BugFix",
                             ts="2024-02-01T00:00:00+00:00"))
    assert [r.changeset_id for r in store.query(level="Machine")] == ["c1", "c2"]
    assert [r.changeset_id for r in store.query(level="Station")] == ["c1"]
    assert [r.changeset_id for r in store.query(category="BugFix")] == ["c2"]
    assert [r.changeset_id for r in store.query(since="2024-01-15T00:00:00Z")] == ["c2"]


def test_schema_rejects_bad_records():
    good = make_record("c1", {"A": {"if-added": 0.1}}).to_dict()
    validate_record(good)
    for mutate in (lambda d: d.update(v=2), lambda d: d.update(category="Chore"),
                   lambda d: d.pop("changeset_id")):
        bad = json.loads(json.dumps(good))
        mutate(bad)
        with pytest.raises(SchemaError):
            validate_record(bad)


def test_many_records_load(store):
    for i in range(856):
        store.append(make_record(f"c{i:04d}", {"A": {"if-added": (i % 10) / 20}}))
    assert len(store.records()) == 856
    assert len(store.history("A")) == 856 - 86      # i % 10 == 0 carries no change


record_layouts = st.lists(
    st.tuples(st.sampled_from(CHANGE_CATEGORIES),
              st.lists(st.sampled_from(ARCHITECTURAL_LEVELS), min_size=1, max_size=3)),
    min_size=1, max_size=15)


@settings(max_examples=30, deadline=None)
@given(record_layouts)
def test_query_partitions_by_category_and_covers_by_level(tmp_path_factory, layout):
    store = HistoryStore(str(tmp_path_factory.mktemp("s") / "h.jsonl"))
    for i, (cat, levels) in enumerate(layout):
        pous = {f"P{j}": ({"if-added": 0.1}, lvl) for j, lvl in enumerate(levels)}
        store.append(make_record(f"c{i}", pous, category=cat))
    by_cat = [r.changeset_id for c in CHANGE_CATEGORIES for r in store.query(category=c)]
    assert sorted(by_cat) == sorted(store.ids())
    by_level = {r.changeset_id for lvl in ARCHITECTURAL_LEVELS for r in store.query(level=lvl)}
    assert by_level == set(store.ids())
    total = sum(len(store.query(level=lvl)) for lvl in ARCHITECTURAL_LEVELS)
    assert total == sum(len(set(levels)) for _, levels in layout)
