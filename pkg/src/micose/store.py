"""Append-only JSON-lines history of analysed changesets.

One record per line. Appends go through an advisory lock file and are a
single ``write`` followed by ``fsync``; a torn final line left by a crash is
ignored on read and trimmed on the next append, so a record is either fully
present or absent.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, Iterable, List, Optional

import filelock
import jsonschema

from micose.errors import DuplicateRecordError, SchemaError, StoreError, StoreLockedError
from micose.maturity import MaturityResult
from micose.metrics import ClassicMetrics

SCHEMA_VERSION = 1
CHANGE_CATEGORIES = ("Enhancement", "BugFix", "Feature", "Development", "Other")
LIFECYCLE_PHASES = ("Design", "StartUp", "Operation")
ARCHITECTURAL_LEVELS = ("PlantModule", "Machine", "Station", "SubSystem", "GeneralFunction")
DEFAULT_STORE = os.path.join(".micose", "history.jsonl")

_METRICS_SCHEMA = {
    "type": ["object", "null"],
    "required": ["sloc", "mccabe", "halstead_difficulty", "fan_in", "fan_out"],
    "properties": {k: {"type": "number", "minimum": 0}
                   for k in ("sloc", "mccabe", "halstead_difficulty", "fan_in", "fan_out")},
}
RECORD_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ChangesetRecord",
    "type": "object",
    "required": ["v", "changeset_id", "timestamp", "author", "category", "lifecycle_phase", "pou_results"],
    "properties": {
        "v": {"const": SCHEMA_VERSION},
        "changeset_id": {"type": "string", "minLength": 1},
        "timestamp": {"type": "string"},
        "author": {"type": "string"},
        "category": {"enum": list(CHANGE_CATEGORIES)},
        "lifecycle_phase": {"enum": list(LIFECYCLE_PHASES) + [None]},
        "pou_results": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["maturity_result", "metrics_before", "metrics_after", "architectural_level"],
                "properties": {
                    "path": {"type": "string"},
                    "baseline": {"type": "boolean"},
                    "architectural_level": {"enum": list(ARCHITECTURAL_LEVELS) + [None]},
                    "metrics_before": _METRICS_SCHEMA,
                    "metrics_after": _METRICS_SCHEMA,
                    "maturity_result": {
                        "type": "object",
                        "required": ["maturity", "n", "color", "term_deltas", "category_deltas", "size_factors"],
                        "properties": {
                            "maturity": {"type": "number", "minimum": 0, "maximum": 1},
                            "n": {"type": "integer", "minimum": 0},
                            "color": {"enum": ["green", "yellow", "red"]},
                        },
                    },
                },
            },
        },
    },
}


@dataclass(frozen=True)
class PouResult:
    maturity: MaturityResult
    metrics_after: Optional[ClassicMetrics] = None
    metrics_before: Optional[ClassicMetrics] = None
    architectural_level: Optional[str] = None
    baseline: bool = False
    path: str = ""

    @property
    def metric_relevant(self) -> bool:
        """False for baselines and for versions whose change vector was empty."""
        return not self.baseline and self.maturity.is_change

    def to_dict(self) -> dict:
        return {
            "path": self.path, "baseline": self.baseline,
            "architectural_level": self.architectural_level,
            "metrics_before": self.metrics_before.to_dict() if self.metrics_before else None,
            "metrics_after": self.metrics_after.to_dict() if self.metrics_after else None,
            "maturity_result": self.maturity.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PouResult":
        mb, ma = data.get("metrics_before"), data.get("metrics_after")
        return cls(
            maturity=MaturityResult.from_dict(data["maturity_result"]),
            metrics_after=ClassicMetrics(**ma) if ma else None,
            metrics_before=ClassicMetrics(**mb) if mb else None,
            architectural_level=data.get("architectural_level"),
            baseline=data.get("baseline", False), path=data.get("path", ""),
        )


@dataclass(frozen=True)
class ChangesetRecord:
    changeset_id: str
    timestamp: str
    author: str = ""
    category: str = "Other"
    lifecycle_phase: Optional[str] = None
    pou_results: Dict[str, PouResult] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "v": SCHEMA_VERSION,
            "changeset_id": self.changeset_id, "timestamp": self.timestamp,
            "author": self.author, "category": self.category,
            "lifecycle_phase": self.lifecycle_phase,
            "pou_results": {name: r.to_dict() for name, r in self.pou_results.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChangesetRecord":
        validate_record(data)
        return cls(
            changeset_id=data["changeset_id"], timestamp=data["timestamp"],
            author=data["author"], category=data["category"],
            lifecycle_phase=data["lifecycle_phase"],
            pou_results={k: PouResult.from_dict(v) for k, v in data["pou_results"].items()},
        )

    @property
    def levels(self) -> List[str]:
        seen = []
        for r in self.pou_results.values():
            if r.architectural_level and r.architectural_level not in seen:
                seen.append(r.architectural_level)
        return seen

    def relevant_results(self, level: Optional[str] = None) -> Dict[str, PouResult]:
        return {k: r for k, r in self.pou_results.items()
                if r.metric_relevant and (level is None or r.architectural_level == level)}


_VALIDATOR = jsonschema.Draft202012Validator(RECORD_SCHEMA)


def validate_record(data: dict):
    error = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(data))
    if error is not None:
        path = "/".join(map(str, error.absolute_path)) or "<record>"
        raise SchemaError(f"record violates schema at {path}: {error.message}")


@dataclass(frozen=True)
class HistoryEntry:
    change_number: int
    record: ChangesetRecord
    result: PouResult


@dataclass(frozen=True)
class PouHistory:
    pou_name: str
    entries: List[HistoryEntry]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


def _parse_time(value: str) -> datetime:
    return datetime.fromisoformat(value.replace("Z", "+00:00"))


class HistoryStore:
    """JSON-lines changeset store with single-writer locking."""

    def __init__(self, path: str = DEFAULT_STORE, lock_timeout: float = 5.0):
        self.path = path
        self.lock_path = path + ".lock"
        self.lock_timeout = lock_timeout

    def _read_lines(self) -> List[str]:
        try:
            with open(self.path, "rb") as fh:
                raw = fh.read()
        except FileNotFoundError:
            return []
        text = raw.decode("utf-8")
        lines = text.split("\n")
        # the last element is "" for a clean file or a torn fragment
        return [ln for ln in lines[:-1] if ln.strip()]

    def records(self) -> List[ChangesetRecord]:
        out = []
        for no, line in enumerate(self._read_lines(), 1):
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreError(f"{self.path}:{no}: corrupt record ({exc})") from None
            out.append(ChangesetRecord.from_dict(data))
        return out

    def ids(self) -> List[str]:
        return [json.loads(line)["changeset_id"] for line in self._read_lines()]

    def __contains__(self, changeset_id: str) -> bool:
        return changeset_id in set(self.ids())

    def get(self, changeset_id: str) -> Optional[ChangesetRecord]:
        for rec in self.records():
            if rec.changeset_id == changeset_id:
                return rec
        return None

    def append(self, record: ChangesetRecord) -> str:
        payload = record.to_dict()
        validate_record(payload)
        line = (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode("utf-8")
        directory = os.path.dirname(os.path.abspath(self.path))
        os.makedirs(directory, exist_ok=True)
        lock = filelock.FileLock(self.lock_path, timeout=self.lock_timeout)
        try:
            with lock:
                self._trim_torn_tail()
                if record.changeset_id in set(self.ids()):
                    raise DuplicateRecordError(record.changeset_id)
                fd = os.open(self.path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
                try:
                    os.write(fd, line)
                    os.fsync(fd)
                finally:
                    os.close(fd)
        except filelock.Timeout:
            raise StoreLockedError(f"store {self.path} is locked by another writer") from None
        return record.changeset_id

    def _trim_torn_tail(self):
        try:
            size = os.path.getsize(self.path)
        except FileNotFoundError:
            return
        if size == 0:
            return
        with open(self.path, "rb+") as fh:
            data = fh.read()
            if data.endswith(b"\n"):
                return
            fh.truncate(data.rfind(b"\n") + 1)

    def history(self, pou_name: str) -> PouHistory:
        key = pou_name.lower()
        entries = []
        for rec in self.records():
            for name, result in rec.pou_results.items():
                if name.lower() == key and result.metric_relevant:
                    entries.append(HistoryEntry(len(entries) + 1, rec, result))
        return PouHistory(pou_name, entries)

    def pou_names(self) -> List[str]:
        names: Dict[str, str] = {}
        for rec in self.records():
            for name in rec.pou_results:
                names.setdefault(name.lower(), name)
        return list(names.values())

    def query(self, category: Optional[str] = None, level: Optional[str] = None,
              phase: Optional[str] = None, since: Optional[str] = None,
              until: Optional[str] = None) -> List[ChangesetRecord]:
        lo = _parse_time(since) if since else None
        hi = _parse_time(until) if until else None
        out = []
        for rec in self.records():
            if category is not None and rec.category != category:
                continue
            if phase is not None and rec.lifecycle_phase != phase:
                continue
            if level is not None and level not in rec.levels:
                continue
            if lo or hi:
                ts = _parse_time(rec.timestamp)
                if (lo and ts < lo) or (hi and ts > hi):
                    continue
            out.append(rec)
        return out


def append_record(store: HistoryStore, record: ChangesetRecord) -> str:
    return store.append(record)


def load_history(store: HistoryStore, pou_name: str) -> PouHistory:
    return store.history(pou_name)


def query(store: HistoryStore, **flt) -> List[ChangesetRecord]:
    return store.query(**flt)


def records_by_id(records: Iterable[ChangesetRecord]) -> Dict[str, ChangesetRecord]:
    return {r.changeset_id: r for r in records}
