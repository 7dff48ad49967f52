import csv
import io
import math
import xml.etree.ElementTree as ET

import pytest

from conftest import make_record
from micose.reports import (
    HISTORY_COLUMNS, HOLDS, INSUFFICIENT, VIOLATED, check_indicators, group_stats, history_rows,
    history_svg, pstdev, split_halves, to_csv,
)


def verdicts(records, histories=()):
    return {v.name: v for v in check_indicators(records, histories)}


def test_population_sigma():
    assert pstdev([0.9, 0.9]) == 0.0
    assert pstdev([0.8, 0.9]) == pytest.approx(0.05)
    assert pstdev([0.5]) == 0.0


def test_group_by_category():
    recs = [make_record("a1", {"P": {"if-added": 0.1}}, category="Feature"),
            make_record("a2", {"P": {"if-added": 0.1}}, category="Feature"),
            make_record("b1", {"P": {"if-added": 0.2}}, category="BugFix"),
            make_record("b2", {"P": {"if-added": 0.1}}, category="BugFix")]
    groups = {g.key: g for g in group_stats(recs, "category").groups}
    assert groups["Feature"].mean == pytest.approx(0.9) and groups["Feature"].sigma == 0.0
    assert groups["BugFix"].mean == pytest.approx(0.85)
    assert groups["BugFix"].sigma == pytest.approx(0.05)


def test_changeset_counts_for_every_level_it_touches():
    rec = make_record("c", {"A": ({"if-added": 0.2}, "Machine"), "B": ({"if-added": 0.4}, "Station"),
                            "C": ({"if-added": 0.0}, "Machine")})
    groups = {g.key: g for g in group_stats([rec], "level").groups}
    assert groups["Machine"].mean == pytest.approx(0.8)     # C carries no change
    assert groups["Station"].mean == pytest.approx(0.6)


def test_changeset_maturity_is_mean_over_pous():
    rec = make_record("c", {"A": {"if-added": 0.2}, "B": {"if-added": 0.4}}, phase="Design")
    (g,) = group_stats([rec], "phase").groups
    assert g.mean == pytest.approx(0.7)


def test_equal_level_means_violate():
    recs = [make_record("x", {"A": ({"if-added": 0.2}, "Machine")}),
            make_record("y", {"B": ({"if-added": 0.2}, "Station")})]
    assert verdicts(recs)["level"].verdict == VIOLATED


def test_decreasing_level_means_hold():
    recs = [make_record("x", {"A": ({"if-added": 0.3}, "Machine")}),
            make_record("y", {"B": ({"if-added": 0.2}, "Station")})]
    assert verdicts(recs)["level"].verdict == HOLDS


def test_no_phases_is_insufficient():
    v = verdicts([make_record("x", {"A": {"if-added": 0.3}})])
    assert v["phase"].verdict == INSUFFICIENT
    assert v["functional-share"].verdict == INSUFFICIENT
    assert v["change-number"].verdict == INSUFFICIENT


def test_category_indicator():
    recs = [make_record("f", {"A": {"if-added": 0.3}}, category="Feature"),
            make_record("b", {"A": {"if-added": 0.1}}, category="BugFix")]
    assert verdicts(recs)["category"].verdict == HOLDS


def test_functional_share_is_ratio_of_sums():
    recs = [make_record("d1", {"A": {"input-variable-added": 0.3, "if-added": 0.1}}, phase="Design"),
            make_record("d2", {"A": {"if-added": 0.2}}, phase="Design"),
            make_record("o1", {"A": {"input-variable-added": 0.1, "if-added": 0.3}}, phase="Operation")]
    share = dict(verdicts(recs)["functional-share"].values)
    assert share["Design"] == pytest.approx(0.3 / 0.6)
    assert share["Operation"] == pytest.approx(0.25)


def test_split_halves_at_half_max():
    pts = [{"change_number": n} for n in (1, 2, 3, 4, 5)]
    first, second = split_halves(pts)
    assert [p["change_number"] for p in first] == [1, 2]
    assert [p["change_number"] for p in second] == [3, 4, 5]


def _history(store, n=5):
    for i in range(n):
        store.append(make_record(f"c{i}", {"FB": {"if-added": 0.05 * (i + 1), "input-variable-added": 0.1}},
                                 phase="Design"))
    return store.history("FB")


def test_history_csv_recomputes_exactly(store):
    hist = _history(store)
    text = to_csv(history_rows(hist), HISTORY_COLUMNS)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert [r["change_number"] for r in rows] == ["1", "2", "3", "4", "5"]
    stored = math.fsum(e.result.maturity.maturity for e in hist) / len(hist)
    assert abs(math.fsum(float(r["maturity"]) for r in rows) / len(rows) - stored) < 1e-9
    assert to_csv(history_rows(hist), HISTORY_COLUMNS) == text


def test_svg_is_standalone_and_deterministic(store):
    hist = _history(store)
    svg = history_svg(hist)
    assert svg == history_svg(hist)
    root = ET.fromstring(svg)
    assert root.tag == "{http://www.w3.org/2000/svg}svg"
    assert "href" not in svg and "<script" not in svg
    circles = root.findall("{http://www.w3.org/2000/svg}circle")
    assert len(circles) == 5
