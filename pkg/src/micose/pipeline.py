"""Analysis pipeline: version pair -> change vector -> maturity, per revision and per hook call."""
from __future__ import annotations

import hashlib
import sys
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, TextIO, Tuple

from micose.catalog import Catalog
from micose.config import RunConfig
from micose.diff import ChangeVector, VersionPair, count_term_changes
from micose.errors import AdapterError, DuplicateRecordError, MicoseError, ParseError, StoreLockedError
from micose.frontend import Pou, parse_pou, split_pous
from micose.maturity import RED, MaturityResult, baseline_result, compute_maturity
from micose.metrics import classic_metrics
from micose.store import ChangesetRecord, HistoryStore, PouResult
from micose.vcs import RevisionInfo, decode_source

EXIT_OK, EXIT_USAGE, EXIT_LOCKED = 0, 2, 3

BASELINE, CHANGE, NO_CHANGE, FAILED = "baseline", "change", "no-change", "failed"


@dataclass
class PouOutcome:
    pou_name: str
    path: str
    status: str
    result: Optional[PouResult] = None
    vector: Optional[ChangeVector] = None
    message: str = ""

    def summary_line(self) -> str:
        if self.status == FAILED:
            return f"{self.pou_name}: analysis failed ({self.message})"
        if self.status == NO_CHANGE:
            return f"{self.pou_name}: no metric-relevant change"
        mr = self.result.maturity
        if self.status == BASELINE:
            return f"{self.pou_name}: baseline recorded, maturity {mr.maturity:.3f} [{mr.color}]"
        cd = mr.category_deltas
        parts = " ".join(f"{c[0]}={cd.get(c, 0.0):.3f}" for c in ("Functional", "Structural", "Operator"))
        return f"{self.pou_name}: maturity {mr.maturity:.3f} [{mr.color}] deltas {parts}"


@dataclass
class RevisionAnalysis:
    info: RevisionInfo
    record: ChangesetRecord
    outcomes: List[PouOutcome] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def any_red(self) -> bool:
        return any(o.status == CHANGE and o.result.maturity.color == RED for o in self.outcomes)


def analyze_pair(before: Optional[Pou], after: Pou, catalog: Catalog, config: RunConfig,
                 project_before=(), project_after=(), path: str = "") -> Tuple[PouResult, Optional[ChangeVector]]:
    """Score one POU version pair; ``before=None`` stores a baseline."""
    level = config.level_for(after.name, path)
    metrics_after = classic_metrics(after, project_after)
    if before is None:
        mr = baseline_result(after.sloc, config.thresholds, config.mode, config.aggregation)
        return PouResult(mr, metrics_after, None, level, baseline=True, path=path), None
    vector = count_term_changes(VersionPair(before, after), catalog)
    mr = compute_maturity(vector, catalog, config.mode, config.aggregation, config.thresholds)
    metrics_before = classic_metrics(before, project_before)
    return PouResult(mr, metrics_after, metrics_before, level, path=path), vector


def analyze_texts(before_text: Optional[str], after_text: str, catalog: Catalog,
                  config: RunConfig) -> Tuple[PouResult, Optional[ChangeVector]]:
    after = parse_pou(after_text)
    before = parse_pou(before_text) if before_text is not None else None
    return analyze_pair(before, after, catalog, config)


class _ParseCache:
    """Parsed POUs keyed by text digest; revisions share most file contents."""

    def __init__(self):
        self._by_digest: Dict[str, List[Tuple[str, Optional[Pou], str]]] = {}

    def units(self, text: str) -> List[Tuple[str, Optional[Pou], str]]:
        """(chunk text, parsed POU or None, error message) per POU chunk."""
        key = hashlib.sha1(text.encode("utf-8")).hexdigest()
        if key not in self._by_digest:
            out = []
            for chunk in split_pous(text):
                try:
                    out.append((chunk, parse_pou(chunk), ""))
                except ParseError as exc:
                    out.append((chunk, None, str(exc)))
            self._by_digest[key] = out
        return self._by_digest[key]


class Analyzer:
    def __init__(self, source, catalog: Catalog, config: RunConfig):
        self.source = source
        self.catalog = catalog
        self.config = config
        self._cache = _ParseCache()
        self._projects: Dict[str, List[Pou]] = {}

    def _decode(self, data: bytes, path: str, warnings: List[str]) -> Optional[str]:
        try:
            text, fallback = decode_source(data, path)
        except AdapterError as exc:
            warnings.append(f"skipped {path}: {exc}")
            return None
        if fallback:
            warnings.append(f"{path}: not UTF-8, decoded as Windows-1252")
        return text

    def project(self, revision: Optional[str]) -> List[Pou]:
        """All parsed POUs in the tree at ``revision`` (used for fan-in)."""
        if revision is None:
            return []
        if revision not in self._projects:
            pous = []
            for path in self.source.list_files(revision):
                try:
                    text, _ = decode_source(self.source.read_bytes(path, revision), path)
                except AdapterError:
                    continue
                pous.extend(p for _, p, _ in self._cache.units(text) if p is not None)
            self._projects[revision] = pous
        return self._projects[revision]

    def analyze_revision(self, info: RevisionInfo, category: Optional[str] = None) -> RevisionAnalysis:
        warnings: List[str] = []
        outcomes: List[PouOutcome] = []
        for path in info.changed_files:
            try:
                after_bytes = self.source.read_bytes(path, info.id)
            except AdapterError as exc:
                warnings.append(f"skipped {path}: {exc}")
                continue
            after_text = self._decode(after_bytes, path, warnings)
            if after_text is None:
                continue
            before_bytes = self.source.previous_bytes(path, info)
            before_text = self._decode(before_bytes, path, warnings) if before_bytes is not None else None
            outcomes.extend(self._analyze_file(path, info, before_text, after_text, warnings))
        results: Dict[str, PouResult] = {}
        for o in outcomes:
            if o.result is None:
                continue
            if o.pou_name in results:
                warnings.append(f"{o.pou_name} defined in more than one changed file; keeping {o.path}")
            results[o.pou_name] = o.result
        record = ChangesetRecord(
            changeset_id=info.id, timestamp=info.timestamp, author=info.author,
            category=self.config.category_for(info.message, category),
            lifecycle_phase=self.config.phase_for(info.message, info.timestamp),
            pou_results=results,
        )
        return RevisionAnalysis(info, record, outcomes, warnings)

    def _analyze_file(self, path, info, before_text, after_text, warnings) -> List[PouOutcome]:
        before_units = {}
        if before_text is not None:
            for chunk, pou, _ in self._cache.units(before_text):
                if pou is not None:
                    before_units[pou.name.lower()] = (chunk, pou)
        out = []
        for chunk, pou, err in self._cache.units(after_text):
            if pou is None:
                out.append(PouOutcome("?", path, FAILED, message=err))
                continue
            if pou.diagnostics:
                d = pou.diagnostics[0]
                out.append(PouOutcome(pou.name, path, FAILED,
                                      message=f"{path}:{d.line}: {d.message}"))
                continue
            prev = before_units.get(pou.name.lower())
            if prev is not None and prev[0] == chunk:
                continue            # untouched POU in a multi-POU file
            before = prev[1] if prev is not None else None
            if before is not None and before.diagnostics:
                before = None
                warnings.append(f"{pou.name}: previous version does not parse cleanly; recording a baseline")
            try:
                result, vector = analyze_pair(
                    before, pou, self.catalog, self.config,
                    self.project(info.parent) if before is not None else (),
                    self.project(info.id), path)
            except MicoseError as exc:
                out.append(PouOutcome(pou.name, path, FAILED, message=str(exc)))
                continue
            if before is None:
                status = BASELINE
            else:
                status = CHANGE if result.metric_relevant else NO_CHANGE
            out.append(PouOutcome(pou.name, path, status, result, vector))
        return out


@dataclass
class HookReport:
    revision: str
    exit_status: int
    outcomes: List[PouOutcome] = field(default_factory=list)
    duplicate: bool = False
    elapsed_s: float = 0.0

    @property
    def results(self) -> Dict[str, MaturityResult]:
        return {o.pou_name: o.result.maturity for o in self.outcomes if o.result is not None}


def hook_run(source, revision: str, store: HistoryStore, catalog: Catalog, config: RunConfig,
             category: Optional[str] = None, out: TextIO = None, err: TextIO = None) -> HookReport:
    """Analyse one committed revision, append its record and print a summary per POU."""
    out = out or sys.stdout
    err = err or sys.stderr
    start = time.perf_counter()
    info = source.revision(revision)
    if info.id in store:
        print(f"{info.id}: already recorded, nothing to do", file=err)
        return HookReport(info.id, EXIT_OK, duplicate=True, elapsed_s=time.perf_counter() - start)
    analysis = Analyzer(source, catalog, config).analyze_revision(info, category)
    for w in analysis.warnings:
        print(f"warning: {w}", file=err)
    try:
        store.append(analysis.record)
    except DuplicateRecordError:
        print(f"{info.id}: already recorded, nothing to do", file=err)
        return HookReport(info.id, EXIT_OK, duplicate=True, elapsed_s=time.perf_counter() - start)
    except StoreLockedError as exc:
        print(f"error: {exc}", file=err)
        return HookReport(info.id, EXIT_LOCKED, analysis.outcomes, elapsed_s=time.perf_counter() - start)
    for o in analysis.outcomes:
        (err if o.status == FAILED else out).write(o.summary_line() + "\n")
    if not analysis.outcomes:
        print(f"{info.id}: no Structured Text changes", file=out)
    status = config.red_exit_code if (config.fail_on_red and analysis.any_red) else EXIT_OK
    elapsed = time.perf_counter() - start
    if elapsed > config.hook_budget_s:
        print(f"warning: analysis took {elapsed:.2f} s, over the {config.hook_budget_s:g} s budget", file=err)
    return HookReport(info.id, status, analysis.outcomes, elapsed_s=elapsed)


@dataclass
class BackfillReport:
    analyzed: int = 0
    baselines: int = 0
    skipped: int = 0
    failures: List[Tuple[str, str]] = field(default_factory=list)

    @property
    def appended(self) -> int:
        return self.analyzed + self.baselines


def backfill(source, store: HistoryStore, catalog: Catalog, config: RunConfig,
             path: Optional[str] = None, err: TextIO = None) -> BackfillReport:
    """Walk all revisions oldest-first and store the ones not stored yet.

    A revision whose POUs are all new counts as a baseline; any other as an
    analysed changeset. Failures are reported per revision and the walk continues.
    """
    err = err or sys.stderr
    report = BackfillReport()
    known = set(store.ids())
    analyzer = Analyzer(source, catalog, config)
    for info in source.list_revisions(path):
        if info.id in known:
            report.skipped += 1
            continue
        try:
            analysis = analyzer.analyze_revision(info)
            for w in analysis.warnings:
                print(f"warning: {info.id}: {w}", file=err)
            store.append(analysis.record)
        except StoreLockedError:
            raise
        except MicoseError as exc:
            report.failures.append((info.id, str(exc)))
            print(f"error: {info.id}: {exc}", file=err)
            continue
        known.add(info.id)
        if all(o.status == BASELINE for o in analysis.outcomes if o.result is not None):
            report.baselines += 1
        else:
            report.analyzed += 1
    return report
