"""Version-pair diffing: statement alignment and per-term change counts.

Statements are aligned by longest common subsequence over normalized
subtree signatures. Unmatched statements in the gaps between LCS anchors are
paired by kind (again LCS, ties broken by token similarity) and the pairs
are "modified"; compounds recurse into their children. Everything else is
added or removed. Declarations are keyed by name, so a rename is one remove
plus one add.
"""
from __future__ import annotations

import difflib
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from micose.catalog import Catalog
from micose.frontend import model as m
from micose.frontend.inventory import (
    ItemInventory, call_sites, called_names, extract_inventory, grouping_parens, is_fb_instance,
    literal_tokens, operator_tokens,
)

EQUAL, MODIFIED, ADDED, REMOVED = "equal", "modified", "added", "removed"

# DP cell budget before falling back to cheaper strategies
_LCS_CELL_LIMIT = 4_000_000
_SIMILARITY_CELL_LIMIT = 2_500


@dataclass(frozen=True)
class VersionPair:
    before: m.Pou
    after: m.Pou
    pou_name: str = ""

    def __post_init__(self):
        name = self.pou_name or self.after.name
        object.__setattr__(self, "pou_name", name)
        if not (self.before.name.lower() == self.after.name.lower() == name.lower()):
            raise ValueError(f"version pair mixes POUs {self.before.name!r} and {self.after.name!r}")


@dataclass(frozen=True)
class TermChangeCount:
    term_id: str
    changed: int
    before_total: int


@dataclass(frozen=True)
class AlignedNode:
    status: str
    before: Optional[m.Statement]
    after: Optional[m.Statement]
    children: Tuple["AlignedNode", ...] = ()

    @property
    def statement(self) -> m.Statement:
        return self.after if self.after is not None else self.before


@dataclass
class AlignmentStats:
    matched: int = 0
    added: int = 0
    removed: int = 0
    modified: int = 0


@dataclass(frozen=True)
class ChangeVector:
    counts: Dict[str, TermChangeCount]
    sloc_before: int
    sloc_after: int
    alignment_stats: AlignmentStats = field(default_factory=AlignmentStats)
    items: Counter = field(default_factory=Counter, repr=False)   # matcher -> changed

    @property
    def empty(self) -> bool:
        return not self.counts


class _Interner:
    """Maps statement subtrees to small ints so LCS compares integers."""

    def __init__(self):
        self.ids: Dict[tuple, int] = {}
        self.flat: Dict[int, List[str]] = {}

    def sig(self, stmt: m.Statement) -> int:
        key = (stmt.kind, tuple((t.kind, t.norm) for t in stmt.tokens),
               tuple(self.sig(c) for c in stmt.children))
        return self.ids.setdefault(key, len(self.ids))

    def flatten(self, stmt: m.Statement) -> List[str]:
        return [t.norm for s in stmt.walk() for t in s.tokens]


def _lcs_pairs(a: Sequence, b: Sequence, eq) -> List[Tuple[int, int]]:
    n, k = len(a), len(b)
    if not n or not k:
        return []
    if n * k > _LCS_CELL_LIMIT:
        sm = difflib.SequenceMatcher(None, list(a), list(b), autojunk=False)
        return [(blk.a + d, blk.b + d) for blk in sm.get_matching_blocks() for d in range(blk.size)]
    table = [[0] * (k + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = table[i], table[i + 1]
        ai = a[i]
        for j in range(k - 1, -1, -1):
            if eq(ai, b[j]):
                row[j] = below[j + 1] + 1
            else:
                row[j] = row[j + 1] if row[j + 1] >= below[j] else below[j]
    pairs, i, j = [], 0, 0
    while i < n and j < k:
        if eq(a[i], b[j]):
            pairs.append((i, j))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def _pair_by_kind(ga: Sequence[m.Statement], gb: Sequence[m.Statement], intern: _Interner):
    """Pair same-kind statements in a gap: max pair count, then max similarity."""
    n, k = len(ga), len(gb)
    if not n or not k:
        return []
    use_sim = n * k <= _SIMILARITY_CELL_LIMIT
    flat_a = [intern.flatten(s) for s in ga] if use_sim else None
    flat_b = [intern.flatten(s) for s in gb] if use_sim else None

    def score(i, j):
        if ga[i].kind != gb[j].kind:
            return None
        if not use_sim:
            return (1, 0.0)
        return (1, difflib.SequenceMatcher(None, flat_a[i], flat_b[j], autojunk=False).ratio())

    best = [[(0, 0.0)] * (k + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(k - 1, -1, -1):
            cand = [best[i + 1][j], best[i][j + 1]]
            s = score(i, j)
            if s is not None:
                nxt = best[i + 1][j + 1]
                cand.append((nxt[0] + s[0], nxt[1] + s[1]))
            best[i][j] = max(cand)
    pairs, i, j = [], 0, 0
    while i < n and j < k:
        s = score(i, j)
        if s is not None:
            nxt = best[i + 1][j + 1]
            if (nxt[0] + s[0], nxt[1] + s[1]) == best[i][j]:
                pairs.append((i, j))
                i += 1
                j += 1
                continue
        if best[i + 1][j] == best[i][j]:
            i += 1
        else:
            j += 1
    return pairs


def _emit_gap(ga, gb, intern, out: List[AlignedNode]):
    pairs = _pair_by_kind(ga, gb, intern)
    i = j = 0
    for pi, pj in pairs + [(len(ga), len(gb))]:
        out.extend(AlignedNode(REMOVED, s, None) for s in ga[i:pi])
        out.extend(AlignedNode(ADDED, None, s) for s in gb[j:pj])
        if pi < len(ga):
            b, a = ga[pi], gb[pj]
            out.append(AlignedNode(MODIFIED, b, a, tuple(_align(b.children, a.children, intern))))
        i, j = pi + 1, pj + 1


def _align(before: Sequence[m.Statement], after: Sequence[m.Statement], intern: _Interner) -> List[AlignedNode]:
    sa = [intern.sig(s) for s in before]
    sb = [intern.sig(s) for s in after]
    n, k = len(sa), len(sb)
    pre = 0
    while pre < n and pre < k and sa[pre] == sb[pre]:
        pre += 1
    suf = 0
    while suf < n - pre and suf < k - pre and sa[n - 1 - suf] == sb[k - 1 - suf]:
        suf += 1
    mid_a, mid_b = sa[pre:n - suf], sb[pre:k - suf]
    anchors = [(pre + i, pre + j) for i, j in _lcs_pairs(mid_a, mid_b, int.__eq__)]
    anchors = [(i, i) for i in range(pre)] + anchors + [(n - suf + d, k - suf + d) for d in range(suf)]

    out: List[AlignedNode] = []
    i = j = 0
    for ai, bj in anchors + [(n, k)]:
        _emit_gap(before[i:ai], after[j:bj], intern, out)
        if ai < n:
            out.append(AlignedNode(EQUAL, before[ai], after[bj]))
        i, j = ai + 1, bj + 1
    return out


def _stmts(x) -> Sequence[m.Statement]:
    return x.body if isinstance(x, m.Pou) else tuple(x)


def align_statements(before, after) -> List[AlignedNode]:
    """Align two statement lists (or the bodies of two POUs)."""
    return _align(_stmts(before), _stmts(after), _Interner())


def alignment_stats(nodes: Sequence[AlignedNode]) -> AlignmentStats:
    stats = AlignmentStats()
    for node in nodes:
        if node.status == EQUAL:
            stats.matched += sum(1 for _ in node.before.walk())
        elif node.status == ADDED:
            stats.added += sum(1 for _ in node.after.walk())
        elif node.status == REMOVED:
            stats.removed += sum(1 for _ in node.before.walk())
        else:
            stats.modified += 1
            sub = alignment_stats(node.children)
            stats.matched += sub.matched
            stats.added += sub.added
            stats.removed += sub.removed
            stats.modified += sub.modified
    return stats


def _multiset_change(before: Counter, after: Counter) -> int:
    return max(sum((after - before).values()), sum((before - after).values()))


def _token_items(tokens, items: Counter):
    for sym in operator_tokens(tokens):
        if sym != ":=":
            items[f"op.{sym}/changed"] += 1
    for cls, _ in literal_tokens(tokens):
        items[f"lit.{cls}/changed"] += 1
    items["paren/changed"] += grouping_parens(tokens)


def _whole_statement(stmt: m.Statement, status: str, items: Counter):
    for s in stmt.walk():
        items[f"stmt.{s.kind}/{status}"] += 1
        _token_items(s.tokens, items)


def _call_arg_changes(before_toks, after_toks) -> int:
    by_callee_b: Dict[str, list] = {}
    by_callee_a: Dict[str, list] = {}
    for site in call_sites(before_toks):
        by_callee_b.setdefault(site.callee, []).append(site.args)
    for site in call_sites(after_toks):
        by_callee_a.setdefault(site.callee, []).append(site.args)
    changed = 0
    for callee in set(by_callee_b) | set(by_callee_a):
        lb, la = by_callee_b.get(callee, []), by_callee_a.get(callee, [])
        changed += sum(1 for x, y in zip(lb, la) if x != y)
        changed += abs(len(lb) - len(la))
    return changed


def _modified_statement(b: m.Statement, a: m.Statement, items: Counter):
    if b.tokens != a.tokens:
        items[f"stmt.{a.kind}/modified"] += 1
        if a.kind in m.CONDITIONED_KINDS and b.condition != a.condition:
            items[f"stmt.{a.kind}/condition-modified"] += 1
        ops_b = Counter(s for s in operator_tokens(b.tokens) if s != ":=")
        ops_a = Counter(s for s in operator_tokens(a.tokens) if s != ":=")
        for sym in ops_b.keys() | ops_a.keys():
            items[f"op.{sym}/changed"] += abs(ops_a[sym] - ops_b[sym])
        lits_b, lits_a = Counter(literal_tokens(b.tokens)), Counter(literal_tokens(a.tokens))
        for cls in {c for c, _ in lits_b} | {c for c, _ in lits_a}:
            cb = Counter({k: v for k, v in lits_b.items() if k[0] == cls})
            ca = Counter({k: v for k, v in lits_a.items() if k[0] == cls})
            items[f"lit.{cls}/changed"] += _multiset_change(cb, ca)
        items["paren/changed"] += abs(grouping_parens(a.tokens) - grouping_parens(b.tokens))
        items["call.args/changed"] += _call_arg_changes(b.tokens, a.tokens)


def statement_items(nodes: Sequence[AlignedNode], items: Optional[Counter] = None) -> Counter:
    items = Counter() if items is None else items
    for node in nodes:
        if node.status == ADDED:
            _whole_statement(node.after, ADDED, items)
        elif node.status == REMOVED:
            _whole_statement(node.before, REMOVED, items)
        elif node.status == MODIFIED:
            _modified_statement(node.before, node.after, items)
            statement_items(node.children, items)
    return items


def declaration_items(before: m.Pou, after: m.Pou, items: Optional[Counter] = None) -> Counter:
    items = Counter() if items is None else items
    for section in (m.VAR_INPUT, m.VAR_OUTPUT, m.VAR_IN_OUT):
        db = {d.key: d for d in before.declarations(section)}
        da = {d.key: d for d in after.declarations(section)}
        items[f"decl.{section}/added"] += len(da.keys() - db.keys())
        items[f"decl.{section}/removed"] += len(db.keys() - da.keys())
        items[f"decl.{section}/retyped"] += sum(1 for k in db.keys() & da.keys()
                                                 if db[k].type_key != da[k].type_key)
    called = called_names(before) | called_names(after)
    inst_b = {d.key for d in before.interface if is_fb_instance(d, called)}
    inst_a = {d.key for d in after.interface if is_fb_instance(d, called)}
    items["fb.instance/added"] += len(inst_a - inst_b)
    items["fb.instance/removed"] += len(inst_b - inst_a)
    vb = {d.key: d for d in before.declarations(m.VAR) if d.key not in inst_b | inst_a}
    va = {d.key: d for d in after.declarations(m.VAR) if d.key not in inst_b | inst_a}
    items["var.internal/added"] += len(va.keys() - vb.keys())
    items["var.internal/removed"] += len(vb.keys() - va.keys())
    items["var.internal/modified"] += sum(
        1 for k in vb.keys() & va.keys()
        if (vb[k].type_key, vb[k].init_key) != (va[k].type_key, va[k].init_key))
    cb = set(extract_inventory(before).calls)
    ca = set(extract_inventory(after).calls)
    items["callee/added"] += len(ca - cb)
    items["callee/removed"] += len(cb - ca)
    return items


def before_totals(inv: ItemInventory) -> Dict[str, int]:
    """Item-kind totals of the before-version, the ratio denominators."""
    totals = {f"decl.{s}": inv.declarations[s] for s in (m.VAR_INPUT, m.VAR_OUTPUT, m.VAR_IN_OUT)}
    totals["var.internal"] = inv.internal_variables
    totals["fb.instance"] = inv.fb_instances
    totals["callee"] = inv.distinct_callees
    for kind in m.STATEMENT_KINDS:
        totals[f"stmt.{kind}"] = inv.statements[kind]
    for sym, count in inv.operators.items():
        totals[f"op.{sym}"] = count
    for cls, count in inv.literals.items():
        totals[f"lit.{cls}"] = count
    totals["call.args"] = inv.total_calls
    totals["paren"] = inv.grouping_parens
    return totals


def count_term_changes(pair: VersionPair, catalog: Catalog,
                       alignment: Optional[Sequence[AlignedNode]] = None) -> ChangeVector:
    if alignment is None:
        alignment = align_statements(pair.before, pair.after)
    items = statement_items(alignment)
    declaration_items(pair.before, pair.after, items)
    items = Counter({k: v for k, v in items.items() if v > 0})
    totals = before_totals(extract_inventory(pair.before))
    counts = {}
    for term in catalog.terms:
        changed = items.get(term.matcher, 0)
        if changed:
            counts[term.id] = TermChangeCount(term.id, changed, totals.get(term.item_kind, 0))
    return ChangeVector(counts, pair.before.sloc, pair.after.sloc, alignment_stats(alignment), items)


def change_ratio(count: TermChangeCount) -> float:
    if count.changed <= 0:
        return 0.0
    return count.changed / max(count.before_total, count.changed)
