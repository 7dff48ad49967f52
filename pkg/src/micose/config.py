"""Run configuration: thresholds, aggregation, level globs, category and phase rules.

Lookup order for the config file: explicit ``--config`` path, then the
``MICOSE_CONFIG`` environment variable, then ``.micose/config.yaml`` in the
working directory. Without any file the built-in defaults apply.
"""
from __future__ import annotations

import fnmatch
import os
import re
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Dict, List, Mapping, Optional

import yaml

from micose.errors import ConfigError
from micose.maturity import ACTIVE, CATALOG, ENHANCED, LEGACY, Thresholds
from micose.store import ARCHITECTURAL_LEVELS, CHANGE_CATEGORIES, DEFAULT_STORE, LIFECYCLE_PHASES

ENV_VAR = "MICOSE_CONFIG"
DEFAULT_CONFIG = os.path.join(".micose", "config.yaml")

DEFAULT_CATEGORY_PATTERNS = {
    "BugFix": r"\[(bug ?fix|fix|bug)\]",
    "Feature": r"\[feature\]",
    "Enhancement": r"\[enhancement\]",
    "Development": r"\[dev(elopment)?\]",
}
DEFAULT_PHASE_PATTERNS = {
    "Design": r"\[phase: ?design\]",
    "StartUp": r"\[phase: ?start-?up\]",
    "Operation": r"\[phase: ?operation\]",
}


@dataclass(frozen=True)
class LevelRule:
    pattern: str
    level: str

    def matches(self, pou_name: str, path: str = "") -> bool:
        pat = self.pattern.lower()
        return fnmatch.fnmatchcase(pou_name.lower(), pat) or bool(path) and fnmatch.fnmatchcase(path.lower(), pat)


@dataclass(frozen=True)
class PhaseBoundary:
    phase: str
    start: datetime


def _as_utc(ts: datetime) -> datetime:
    return ts.replace(tzinfo=timezone.utc) if ts.tzinfo is None else ts


def parse_timestamp(value) -> datetime:
    if isinstance(value, datetime):
        return _as_utc(value)
    if hasattr(value, "year") and not isinstance(value, str):      # yaml date
        return datetime(value.year, value.month, value.day, tzinfo=timezone.utc)
    try:
        return _as_utc(datetime.fromisoformat(str(value).replace("Z", "+00:00")))
    except ValueError:
        raise ConfigError(f"not an ISO timestamp: {value!r}") from None


@dataclass(frozen=True)
class RunConfig:
    catalog_path: Optional[str] = None
    store_path: str = DEFAULT_STORE
    thresholds: Thresholds = field(default_factory=Thresholds)
    aggregation: str = ACTIVE
    mode: str = ENHANCED
    file_pattern: str = "*.st"
    levels: List[LevelRule] = field(default_factory=list)
    category_patterns: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_CATEGORY_PATTERNS))
    phase_patterns: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_PHASE_PATTERNS))
    phase_boundaries: List[PhaseBoundary] = field(default_factory=list)
    fail_on_red: bool = False
    red_exit_code: int = 1
    hook_budget_s: float = 5.0
    lock_timeout_s: float = 5.0

    def __post_init__(self):
        if self.aggregation not in (ACTIVE, CATALOG):
            raise ConfigError(f"aggregation must be 'active' or 'catalog', got {self.aggregation!r}")
        if self.mode not in (ENHANCED, LEGACY):
            raise ConfigError(f"mode must be 'enhanced' or 'legacy', got {self.mode!r}")
        for rule in self.levels:
            if rule.level not in ARCHITECTURAL_LEVELS:
                raise ConfigError(f"unknown architectural level {rule.level!r}; "
                                  f"expected one of {', '.join(ARCHITECTURAL_LEVELS)}")
        for name, pats in (("category", self.category_patterns), ("phase", self.phase_patterns)):
            allowed = CHANGE_CATEGORIES if name == "category" else LIFECYCLE_PHASES
            for key, pat in pats.items():
                if key not in allowed:
                    raise ConfigError(f"unknown {name} {key!r} in {name} patterns")
                try:
                    re.compile(pat)
                except re.error as exc:
                    raise ConfigError(f"bad {name} pattern for {key}: {exc}") from None
        for b in self.phase_boundaries:
            if b.phase not in LIFECYCLE_PHASES:
                raise ConfigError(f"unknown lifecycle phase {b.phase!r}")
        if self.red_exit_code in (0, 2, 3):
            raise ConfigError("red_exit_code must differ from 0 and from the usage (2) and lock (3) codes")

    def with_overrides(self, **kw) -> "RunConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def level_for(self, pou_name: str, path: str = "") -> Optional[str]:
        for rule in self.levels:
            if rule.matches(pou_name, path):
                return rule.level
        return None

    def category_for(self, message: str = "", override: Optional[str] = None) -> str:
        if override:
            if override not in CHANGE_CATEGORIES:
                raise ConfigError(f"unknown change category {override!r}")
            return override
        for cat, pat in self.category_patterns.items():
            if re.search(pat, message or "", re.IGNORECASE):
                return cat
        return "Other"

    def phase_for(self, message: str = "", timestamp: Optional[str] = None) -> Optional[str]:
        for phase, pat in self.phase_patterns.items():
            if re.search(pat, message or "", re.IGNORECASE):
                return phase
        if self.phase_boundaries and timestamp:
            ts = parse_timestamp(timestamp)
            current = None
            for b in sorted(self.phase_boundaries, key=lambda b: b.start):
                if ts >= b.start:
                    current = b.phase
            return current
        return None


_KNOWN_KEYS = {
    "catalog", "store", "thresholds", "aggregation", "mode", "file_pattern", "levels",
    "category_patterns", "phase_patterns", "phase_boundaries", "fail_on_red", "red_exit_code",
    "hook_budget_s", "lock_timeout_s",
}


def config_from_mapping(data: Mapping) -> RunConfig:
    """Relative paths stay relative to the working directory (the repository root for hooks)."""
    if not isinstance(data, Mapping):
        raise ConfigError("config root must be a mapping")
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    kw = {}
    if "catalog" in data and data["catalog"]:
        kw["catalog_path"] = str(data["catalog"])
    if "store" in data and data["store"]:
        kw["store_path"] = str(data["store"])
    if "thresholds" in data:
        t = data["thresholds"] or {}
        kw["thresholds"] = Thresholds(float(t.get("green", 0.90)), float(t.get("yellow", 0.70)))
    for key in ("aggregation", "mode", "file_pattern"):
        if key in data:
            kw[key] = str(data[key])
    if "levels" in data:
        try:
            kw["levels"] = [LevelRule(str(e["pattern"]), str(e["level"])) for e in data["levels"] or []]
        except (KeyError, TypeError):
            raise ConfigError("each level rule needs 'pattern' and 'level'") from None
    for key in ("category_patterns", "phase_patterns"):
        if key in data:
            kw[key] = {str(k): str(v) for k, v in (data[key] or {}).items()}
    if "phase_boundaries" in data:
        try:
            kw["phase_boundaries"] = [PhaseBoundary(str(e["phase"]), parse_timestamp(e["start"]))
                                      for e in data["phase_boundaries"] or []]
        except (KeyError, TypeError):
            raise ConfigError("each phase boundary needs 'phase' and 'start'") from None
    if "fail_on_red" in data:
        kw["fail_on_red"] = bool(data["fail_on_red"])
    for key, conv in (("red_exit_code", int), ("hook_budget_s", float), ("lock_timeout_s", float)):
        if key in data:
            kw[key] = conv(data[key])
    return RunConfig(**kw)


def resolve_config_path(explicit: Optional[str] = None, env: Optional[Mapping] = None) -> Optional[str]:
    env = os.environ if env is None else env
    if explicit:
        return explicit
    if env.get(ENV_VAR):
        return env[ENV_VAR]
    return DEFAULT_CONFIG if os.path.exists(DEFAULT_CONFIG) else None


def load_config(path: Optional[str] = None, env: Optional[Mapping] = None) -> RunConfig:
    resolved = resolve_config_path(path, env)
    if resolved is None:
        return RunConfig()
    try:
        with open(resolved, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {resolved}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{resolved}: invalid YAML: {exc}") from None
    return config_from_mapping(data)
