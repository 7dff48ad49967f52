"""Change-term catalog: the 69 default change terms and their weights.

Each term has a criticality category (level weight ``s1``), a company
weight ``s2`` and a matcher naming the diff item it counts. The term weight
blends both with the Pareto pair: ``w = a*s1 + b*s2``.

The default term list is a reconstruction (the original list is not
published); load a YAML file to override weights or add terms.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Mapping, Optional, Tuple

import yaml

from micose.errors import CatalogError
from micose.frontend import model as m
from micose.frontend.inventory import OPERATOR_SYMBOLS
from micose.frontend.lexer import LITERAL_CLASSES

FUNCTIONAL = "Functional"
STRUCTURAL = "Structural"
OPERATOR = "Operator"
CATEGORY_ORDER = (FUNCTIONAL, STRUCTURAL, OPERATOR)
DEFAULT_S1 = {FUNCTIONAL: 1.0, STRUCTURAL: 0.67, OPERATOR: 0.33}
DEFAULT_S2 = 0.5
DEFAULT_PARETO = (0.80, 0.20)
DEFAULT_P = 5.0

# item kind -> changes the diff engine reports for it
_STMT_KINDS = (m.IF, m.ELSIF_ARM, m.ELSE_ARM, m.CASE, m.CASE_ARM, m.FOR, m.WHILE,
               m.REPEAT, m.ASSIGN, m.CALL, m.EXIT, m.RETURN)
ITEM_KINDS: Dict[str, Tuple[str, ...]] = {
    **{f"decl.{s}": ("added", "removed", "retyped") for s in (m.VAR_INPUT, m.VAR_OUTPUT, m.VAR_IN_OUT)},
    "var.internal": ("added", "removed", "modified"),
    "fb.instance": ("added", "removed"),
    "callee": ("added", "removed"),
    **{f"stmt.{k}": ("added", "removed", "modified", "condition-modified") for k in _STMT_KINDS},
    **{f"op.{s}": ("changed",) for s in OPERATOR_SYMBOLS if s != ":="},
    **{f"lit.{c}": ("changed",) for c in LITERAL_CLASSES},
    "call.args": ("changed",),
    "paren": ("changed",),
}


@dataclass(frozen=True)
class CriticalityCategory:
    name: str
    s1: float


@dataclass(frozen=True)
class ChangeTerm:
    id: str
    label: str
    category: CriticalityCategory
    s2: float
    matcher: str   # "<item kind>/<change>"

    @property
    def item_kind(self) -> str:
        return self.matcher.rsplit("/", 1)[0]

    @property
    def change(self) -> str:
        return self.matcher.rsplit("/", 1)[1]


@dataclass(frozen=True)
class Catalog:
    terms: Tuple[ChangeTerm, ...]
    pareto: Tuple[float, float] = DEFAULT_PARETO
    p: float = DEFAULT_P
    _index: Mapping[str, ChangeTerm] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {t.id: t for t in self.terms})
        object.__setattr__(self, "_positions", {t.id: i for i, t in enumerate(self.terms)})

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term_id):
        return term_id in self._index

    def __getitem__(self, term_id) -> ChangeTerm:
        return self._index[term_id]

    def position(self, term_id) -> int:
        """Column of ``term_id`` in catalog order."""
        return self._positions[term_id]

    def categories(self) -> Dict[str, CriticalityCategory]:
        return {t.category.name: t.category for t in self.terms}

    @property
    def fingerprint(self) -> str:
        payload = [self.pareto, self.p,
                   [(t.id, t.category.name, t.category.s1, t.s2, t.matcher) for t in self.terms]]
        return hashlib.sha1(json.dumps(payload).encode()).hexdigest()[:12]


def term_weight(term: ChangeTerm, catalog: Catalog) -> float:
    a, b = catalog.pareto
    return a * term.category.s1 + b * term.s2


def _default_specs():
    """(id, label, category, matcher) for the built-in 69 terms."""
    specs = []
    for section, word in ((m.VAR_INPUT, "input"), (m.VAR_OUTPUT, "output"), (m.VAR_IN_OUT, "inout")):
        for change in ("added", "removed", "retyped"):
            specs.append((f"{word}-variable-{change}", f"{word} variable {change}",
                          FUNCTIONAL, f"decl.{section}/{change}"))
    specs += [
        ("internal-variable-added", "internal variable added", FUNCTIONAL, "var.internal/added"),
        ("internal-variable-removed", "internal variable removed", FUNCTIONAL, "var.internal/removed"),
        ("fb-instance-added", "FB instance declared", FUNCTIONAL, "fb.instance/added"),
        ("fb-instance-removed", "FB instance removed", FUNCTIONAL, "fb.instance/removed"),
        ("callee-introduced", "new distinct callee", FUNCTIONAL, "callee/added"),
        ("callee-removed", "callee no longer called", FUNCTIONAL, "callee/removed"),
    ]
    for kind, word in ((m.IF, "if"), (m.ELSIF_ARM, "elsif"), (m.CASE, "case"), (m.FOR, "for"),
                       (m.WHILE, "while"), (m.REPEAT, "repeat")):
        specs.append((f"{word}-added", f"{kind} added", STRUCTURAL, f"stmt.{kind}/added"))
        specs.append((f"{word}-removed", f"{kind} removed", STRUCTURAL, f"stmt.{kind}/removed"))
        specs.append((f"{word}-condition-modified", f"{kind} condition modified", STRUCTURAL,
                      f"stmt.{kind}/condition-modified"))
    specs += [
        ("case-arm-added", "Case arm added", STRUCTURAL, f"stmt.{m.CASE_ARM}/added"),
        ("case-arm-removed", "Case arm removed", STRUCTURAL, f"stmt.{m.CASE_ARM}/removed"),
    ]
    specs += [
        ("assignment-modified", "assignment modified", OPERATOR, f"stmt.{m.ASSIGN}/modified"),
        ("assignment-added", "assignment added", OPERATOR, f"stmt.{m.ASSIGN}/added"),
        ("assignment-removed", "assignment removed", OPERATOR, f"stmt.{m.ASSIGN}/removed"),
        ("call-statement-added", "call statement added", OPERATOR, f"stmt.{m.CALL}/added"),
        ("call-statement-removed", "call statement removed", OPERATOR, f"stmt.{m.CALL}/removed"),
    ]
    names = {"+": "add", "-": "sub", "*": "mul", "/": "div", "MOD": "mod", "**": "pow",
             "=": "eq", "<>": "ne", "<": "lt", "<=": "le", ">": "gt", ">=": "ge",
             "AND": "and", "OR": "or", "XOR": "xor", "NOT": "not"}
    for sym in OPERATOR_SYMBOLS:
        if sym == ":=":
            continue
        specs.append((f"operator-{names[sym]}-changed", f"operator {sym} changed", OPERATOR, f"op.{sym}/changed"))
    for cls in LITERAL_CLASSES:
        specs.append((f"literal-{cls}-changed", f"{cls} literal changed", OPERATOR, f"lit.{cls}/changed"))
    specs += [
        ("call-argument-changed", "call argument changed", OPERATOR, "call.args/changed"),
        ("else-arm-added", "Else arm added", OPERATOR, f"stmt.{m.ELSE_ARM}/added"),
        ("else-arm-removed", "Else arm removed", OPERATOR, f"stmt.{m.ELSE_ARM}/removed"),
        ("exit-added", "EXIT added", OPERATOR, f"stmt.{m.EXIT}/added"),
        ("exit-removed", "EXIT removed", OPERATOR, f"stmt.{m.EXIT}/removed"),
        ("return-added", "RETURN added", OPERATOR, f"stmt.{m.RETURN}/added"),
        ("return-removed", "RETURN removed", OPERATOR, f"stmt.{m.RETURN}/removed"),
        ("parenthesization-changed", "parenthesization changed", OPERATOR, "paren/changed"),
        ("internal-variable-initializer-changed", "internal variable initializer or type changed",
         OPERATOR, "var.internal/modified"),
    ]
    return specs


def validate_matcher(matcher: str) -> bool:
    if "/" not in matcher:
        return False
    item, change = matcher.rsplit("/", 1)
    return change in ITEM_KINDS.get(item, ())


def _build(specs, s1: Mapping[str, float], s2: Mapping[str, float], pareto, p) -> Catalog:
    cats = {name: CriticalityCategory(name, float(v)) for name, v in s1.items()}
    terms = tuple(ChangeTerm(tid, label, cats[cat], float(s2.get(tid, DEFAULT_S2)), matcher)
                  for tid, label, cat, matcher in specs)
    return Catalog(terms, tuple(pareto), float(p))


def default_catalog() -> Catalog:
    return _build(_default_specs(), DEFAULT_S1, {}, DEFAULT_PARETO, DEFAULT_P)


def catalog_from_mapping(data: Optional[Mapping]) -> Catalog:
    """Apply an override tree to the default catalog and validate the result."""
    data = dict(data or {})
    offenders = []

    s1 = dict(DEFAULT_S1)
    for name, value in (data.get("categories") or {}).items():
        if name not in s1:
            offenders.append(f"unknown category {name!r}")
            continue
        s1[name] = value
    vals = [s1[c] for c in CATEGORY_ORDER]
    if not all(isinstance(v, (int, float)) and 0 <= v <= 1 for v in vals) or not (vals[0] > vals[1] > vals[2]):
        offenders.append(f"s1 must lie in [0,1] and decrease Functional > Structural > Operator, got {vals}")

    pareto = data.get("pareto", DEFAULT_PARETO)
    if isinstance(pareto, Mapping):
        pareto = (pareto.get("a", DEFAULT_PARETO[0]), pareto.get("b", DEFAULT_PARETO[1]))
    try:
        pareto = (float(pareto[0]), float(pareto[1]))
        if abs(sum(pareto) - 1.0) > 1e-9 or min(pareto) < 0:
            offenders.append(f"pareto weights must be non-negative and sum to 1, got {pareto}")
    except (TypeError, ValueError, IndexError):
        offenders.append(f"malformed pareto pair {pareto!r}")
        pareto = DEFAULT_PARETO

    p = data.get("p", DEFAULT_P)
    if not isinstance(p, (int, float)) or p <= 0:
        offenders.append(f"p must be a positive number, got {p!r}")
        p = DEFAULT_P

    specs = {tid: [tid, label, cat, matcher] for tid, label, cat, matcher in _default_specs()}
    s2: Dict[str, float] = {}
    terms = data.get("terms") or {}
    if not isinstance(terms, Mapping):
        raise CatalogError("'terms' must be a mapping of term id to settings")
    for tid, entry in terms.items():
        entry = entry if isinstance(entry, Mapping) else {"s2": entry}
        spec = specs.get(tid)
        if spec is None:
            if "category" not in entry or "matcher" not in entry:
                offenders.append(f"new term {tid!r} needs category and matcher")
                continue
            spec = specs[tid] = [tid, entry.get("label", tid), entry["category"], entry["matcher"]]
        if "category" in entry:
            spec[2] = entry["category"]
        if "matcher" in entry:
            spec[3] = entry["matcher"]
        if "label" in entry:
            spec[1] = entry["label"]
        if spec[2] not in CATEGORY_ORDER:
            offenders.append(f"{tid}: unknown category {spec[2]!r}")
        if not validate_matcher(spec[3]):
            offenders.append(f"{tid}: unknown matcher {spec[3]!r}")
        if "s2" in entry:
            v = entry["s2"]
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not 0 <= v <= 1:
                offenders.append(f"{tid}: s2={v!r} outside [0,1]")
            else:
                s2[tid] = v
    if offenders:
        raise CatalogError("invalid catalog", offenders)
    return _build(specs.values(), s1, s2, pareto, p)


def _check_duplicate_keys(text: str, path: str):
    class _Loader(yaml.SafeLoader):
        pass

    dups = []

    def construct(loader, node, deep=False):
        keys = set()
        for key_node, _ in node.value:
            key = loader.construct_object(key_node, deep=deep)
            if key in keys:
                dups.append(key)
            keys.add(key)
        return loader.construct_mapping(node, deep)

    _Loader.add_constructor(yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, construct)
    data = yaml.load(text, Loader=_Loader)
    if dups:
        raise CatalogError(f"duplicate term ids in {path}", dups)
    return data


def load_catalog(path: Optional[str]) -> Catalog:
    """Load a catalog override file; a missing file yields the default catalog."""
    if not path or not os.path.exists(path):
        return default_catalog()
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = _check_duplicate_keys(text, path)
    except yaml.YAMLError as exc:
        raise CatalogError(f"cannot parse {path}: {exc}") from exc
    if data is not None and not isinstance(data, Mapping):
        raise CatalogError(f"{path}: top level must be a mapping")
    return catalog_from_mapping(data)


def dump_catalog(catalog: Catalog) -> str:
    """Render a catalog as a commented YAML file that ``load_catalog`` accepts."""
    lines = [
        "# Change-term catalog.",
        "# w = pareto.a * s1(category) + pareto.b * s2(term); p is the exponential steepness.",
        "# Matchers name '<item kind>/<change>' pairs produced by the diff engine.",
        "# This default list is a reconstruction; adjust s2 per company workshop.",
        f"pareto: {{a: {catalog.pareto[0]}, b: {catalog.pareto[1]}}}",
        f"p: {catalog.p}",
        "categories:",
    ]
    for name, cat in sorted(catalog.categories().items(), key=lambda kv: CATEGORY_ORDER.index(kv[0])):
        lines.append(f"  {name}: {cat.s1}")
    lines.append("terms:")
    current = None
    for t in catalog.terms:
        if t.category.name != current:
            current = t.category.name
            lines.append(f"  # {current}")
        lines.append(f"  {t.id}: {{category: {t.category.name}, s2: {t.s2}, "
                     f"matcher: {json.dumps(t.matcher)}, label: {json.dumps(t.label)}}}")
    return "\n".join(lines) + "\n"


def with_s2(catalog: Catalog, overrides: Mapping[str, float]) -> Catalog:
    terms = tuple(replace(t, s2=float(overrides[t.id])) if t.id in overrides else t for t in catalog.terms)
    return Catalog(terms, catalog.pareto, catalog.p)


def terms_by_matcher(catalog: Catalog) -> Dict[str, Tuple[ChangeTerm, ...]]:
    out: Dict[str, list] = {}
    for t in catalog.terms:
        out.setdefault(t.matcher, []).append(t)
    return {k: tuple(v) for k, v in out.items()}


def iter_categories(catalog: Catalog) -> Iterable[str]:
    present = {t.category.name for t in catalog.terms}
    return [c for c in CATEGORY_ORDER if c in present]
