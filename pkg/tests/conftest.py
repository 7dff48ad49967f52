import contextlib
import io
import os
import sys

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, HERE)

FIXTURES = os.path.join(HERE, "fixtures")
ST_DIR = os.path.join(FIXTURES, "st")
GOLDEN_DIR = os.path.join(FIXTURES, "golden")
REPO_ROOT = os.path.dirname(HERE)


def fixture_text(name: str) -> str:
    with open(os.path.join(ST_DIR, name), encoding="utf-8") as fh:
        return fh.read()


def run_cli(*args):
    """Run ``micose`` in-process; returns (exit status, stdout, stderr)."""
    from micose.cli import main
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        try:
            rc = main([str(a) for a in args])
        except SystemExit as exc:      # argparse usage errors
            rc = exc.code
    return rc, out.getvalue(), err.getvalue()


def make_result(deltas, sloc: int = 100, n=None):
    """MaturityResult from {term_id: delta} using the default catalog."""
    from micose.catalog import default_catalog
    from micose.maturity import TermDelta, aggregate, size_factors
    cat = default_catalog()
    tds = [TermDelta(tid, d, 1.0, d, cat[tid].category.name, 1, 1, cat.fingerprint)
           for tid, d in deltas.items()]
    return aggregate(tds, size=size_factors(sloc))


def make_record(cid, pous, category="Other", phase=None, ts="2024-01-01T00:00:00+00:00"):
    """ChangesetRecord from {pou: {term: delta}} or {pou: (deltas, level)}."""
    from micose.store import ChangesetRecord, PouResult
    results = {}
    for name, entry in pous.items():
        deltas, level = entry if isinstance(entry, tuple) else (entry, None)
        results[name] = PouResult(make_result(deltas), architectural_level=level)
    return ChangesetRecord(cid, ts, "dev", category, phase, results)


@pytest.fixture
def store(tmp_path):
    from micose.store import HistoryStore
    return HistoryStore(str(tmp_path / ".micose" / "history.jsonl"))


@pytest.fixture
def chdir(tmp_path):
    old = os.getcwd()
    os.chdir(tmp_path)
    yield tmp_path
    os.chdir(old)


@pytest.fixture(autouse=True)
def _no_ambient_config(monkeypatch):
    monkeypatch.delenv("MICOSE_CONFIG", raising=False)


_ACCEPTANCE = pytest.StashKey()


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): one numbered acceptance criterion")


def _acceptance_lines(config):
    return config.stash.setdefault(_ACCEPTANCE, {})


@pytest.fixture
def criterion(request):
    """``criterion(ok, detail)`` records the PASS/FAIL line of the marked test, then asserts ``ok``."""
    number, title = request.node.get_closest_marker("acceptance").args

    def record(ok: bool, detail: str = ""):
        line = f"{'PASS' if ok else 'FAIL'} [{number:>2}] {title}" + (f": {detail}" if detail else "")
        _acceptance_lines(request.config)[number] = line
        print(line)
        assert ok, line
    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker and report.failed:
        number, title = marker.args
        lines = _acceptance_lines(item.config)
        if number not in lines or lines[number].startswith("PASS"):
            lines[number] = f"FAIL [{number:>2}] {title}: {call.excinfo.typename if call.excinfo else 'error'}"


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
