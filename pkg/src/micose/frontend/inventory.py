"""Item inventories: the per-kind counts a POU version contributes."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, List, NamedTuple, Sequence, Tuple

from micose.frontend import model as m
from micose.frontend.lexer import IDENT, LITERAL, OP, SEP, Token

# Operator symbols the change catalog tracks individually.
OPERATOR_SYMBOLS = (
    ":=", "+", "-", "*", "/", "MOD", "**",
    "=", "<>", "<", "<=", ">", ">=",
    "AND", "OR", "XOR", "NOT",
)

# Declarations of these types are FB instances even when never called.
STANDARD_FBS = frozenset("""
    TON TOF TP LTON LTOF LTP R_TRIG F_TRIG CTU CTD CTUD SR RS
""".split())


class CallSite(NamedTuple):
    callee: str          # lower-cased, dotted path for member calls
    args: Tuple[Token, ...]


def call_sites(tokens: Sequence[Token]) -> Iterator[CallSite]:
    """Yield every ``name(...)`` call expression in a flat token list."""
    n = len(tokens)
    for i, tok in enumerate(tokens):
        if tok.kind != IDENT or i + 1 >= n:
            continue
        nxt = tokens[i + 1]
        if nxt.kind != SEP or nxt.norm != "(":
            continue
        parts = [tok.norm]
        j = i - 1
        while j >= 1 and tokens[j].kind == SEP and tokens[j].norm == "." and tokens[j - 1].kind == IDENT:
            parts.insert(0, tokens[j - 1].norm)
            j -= 2
        depth, k = 0, i + 1
        while k < n:
            t = tokens[k]
            if t.kind == SEP and t.norm == "(":
                depth += 1
            elif t.kind == SEP and t.norm == ")":
                depth -= 1
                if depth == 0:
                    break
            k += 1
        yield CallSite(".".join(parts), tuple(tokens[i + 2:k]))


def grouping_parens(tokens: Sequence[Token]) -> int:
    """Opening parentheses that group expressions rather than open a call."""
    count = 0
    for i, tok in enumerate(tokens):
        if tok.kind == SEP and tok.norm == "(" and not (i and tokens[i - 1].kind == IDENT):
            count += 1
    return count


def operator_tokens(tokens: Sequence[Token]) -> List[str]:
    return [t.norm for t in tokens if t.kind == OP]


def literal_tokens(tokens: Sequence[Token]) -> List[Tuple[str, str]]:
    return [(t.lit_class, t.norm) for t in tokens if t.kind == LITERAL]


def is_fb_instance(decl: m.Declaration, called: frozenset) -> bool:
    if decl.section not in (m.VAR,):
        return False
    type_name = decl.type_key
    return type_name in STANDARD_FBS or decl.key in called


@dataclass(frozen=True)
class ItemInventory:
    declarations: Counter = field(default_factory=Counter)   # section -> count
    statements: Counter = field(default_factory=Counter)     # kind -> count
    calls: Counter = field(default_factory=Counter)          # callee -> count
    operators: Counter = field(default_factory=Counter)      # symbol -> count
    literals: Counter = field(default_factory=Counter)       # class -> count
    fb_instances: int = 0
    internal_variables: int = 0
    grouping_parens: int = 0

    @property
    def total_operators(self) -> int:
        return sum(self.operators.values())

    @property
    def total_calls(self) -> int:
        return sum(self.calls.values())

    @property
    def distinct_callees(self) -> int:
        return len(self.calls)


def called_names(pou: m.Pou) -> frozenset:
    """First path segment of every callee in the body (instance names)."""
    names = set()
    for stmt in pou.walk():
        for site in call_sites(stmt.tokens):
            names.add(site.callee.split(".")[0])
    return frozenset(names)


def extract_inventory(pou: m.Pou) -> ItemInventory:
    decls = Counter(d.section for d in pou.interface)
    stmts, calls, ops, lits = Counter(), Counter(), Counter(), Counter()
    parens = 0
    for stmt in pou.walk():
        stmts[stmt.kind] += 1
        for site in call_sites(stmt.tokens):
            calls[site.callee] += 1
        ops.update(operator_tokens(stmt.tokens))
        lits.update(cls for cls, _ in literal_tokens(stmt.tokens))
        parens += grouping_parens(stmt.tokens)
    called = called_names(pou)
    instances = sum(1 for d in pou.interface if is_fb_instance(d, called))
    internal = sum(1 for d in pou.declarations(m.VAR) if not is_fb_instance(d, called))
    return ItemInventory(decls, stmts, calls, ops, lits, instances, internal, parens)
