import json
import os

import pytest

from conftest import GOLDEN_DIR, fixture_text
from micose.frontend import parse_pou
from micose.metrics import (
    classic_metrics, fan_metrics, format_percent, halstead_difficulty, mccabe, percent_change,
)

GOLDEN = {k: v for k, v in json.load(open(os.path.join(GOLDEN_DIR, "metrics.json"))).items()
          if not k.startswith("_")}


def pou(body, decl="VAR a, b, c : INT; END_VAR"):
    return parse_pou(f"PROGRAM P\n{decl}\n{body}\nEND_PROGRAM\n")


def test_halstead_small_examples():
    assert halstead_difficulty(pou("a := b;")) == 0.5
    assert halstead_difficulty(pou("a := a + 1;")) == 1.5


def test_halstead_without_operands_is_zero():
    assert halstead_difficulty(pou("RETURN;")) == 0.0


def test_mccabe_examples():
    assert mccabe(pou("a := 1;")) == 1
    assert mccabe(pou("IF a > 1 THEN a := 1; ELSE a := 2; END_IF;")) == 2
    text = "IF a > 1 THEN a := 1; ELSIF b > 1 THEN a := 3; END_IF; WHILE a < 3 DO a := a + 1; END_WHILE;"
    assert mccabe(pou(text)) == 4


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_fixture_goldens(name):
    p = parse_pou(fixture_text(name))
    g = GOLDEN[name]
    assert p.sloc == g["sloc"]
    assert mccabe(p) == g["mccabe"]
    assert halstead_difficulty(p) == pytest.approx(g["difficulty"], abs=1e-9)


def test_fan_in_resolves_instance_types():
    callee = parse_pou(fixture_text("increment.st"))
    caller = parse_pou("PROGRAM Main\nVAR inc : FB_Inc; END_VAR\ninc(step := 2);\nEND_PROGRAM\n")
    other = parse_pou("PROGRAM Other\nVAR x : INT; END_VAR\nx := 1;\nEND_PROGRAM\n")
    assert fan_metrics([callee, caller, other], callee) == (1, 0)
    assert fan_metrics([callee, caller, other], caller) == (0, 1)


def test_fan_out_counts_call_expressions():
    assert classic_metrics(parse_pou(fixture_text("calls.st"))).fan_out == 2


def test_percent_change_and_format():
    assert format_percent(percent_change(1068, 1134)) == "↑ 6.2%"
    assert format_percent(percent_change(189, 189)) == "→ 0%"
    assert format_percent(percent_change(100, 90)) == "↓ 10.0%"
    assert percent_change(0, 5) is None
    assert format_percent(None) == "n/a"
