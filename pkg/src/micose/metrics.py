"""Classic baseline metrics for ST POUs: SLOC, McCabe, Halstead difficulty, fan-in/out.

Token table used for Halstead: keywords, operator symbols, ``(``, ``[`` and
``.`` are operators; identifiers and literals are operands. Separators
``; , : ) ] ..`` count as neither. McCabe counts If, Elsif-arm, Case-arm,
For, While and Repeat as decision points; boolean operators inside
conditions do not count.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Iterable, Optional, Tuple

from micose.frontend import model as m
from micose.frontend.inventory import call_sites
from micose.frontend.lexer import IDENT, KEYWORD, LITERAL, OP, SEP

DECISION_KINDS = frozenset([m.IF, m.ELSIF_ARM, m.CASE_ARM, m.FOR, m.WHILE, m.REPEAT])
_OPERATOR_SEPS = frozenset(["(", "[", "."])


@dataclass(frozen=True)
class ClassicMetrics:
    sloc: int
    mccabe: int
    halstead_difficulty: float
    fan_in: int
    fan_out: int

    def to_dict(self):
        return asdict(self)


def mccabe(pou: m.Pou) -> int:
    return 1 + sum(1 for s in pou.walk() if s.kind in DECISION_KINDS)


def halstead_counts(pou: m.Pou) -> Tuple[int, int, int, int]:
    """(distinct operators, distinct operands, total operators, total operands)."""
    ops, opnds = set(), set()
    n_ops = n_opnds = 0
    for tok in pou.body_tokens:
        if tok.kind in (KEYWORD, OP) or (tok.kind == SEP and tok.norm in _OPERATOR_SEPS):
            ops.add(tok.norm)
            n_ops += 1
        elif tok.kind in (IDENT, LITERAL):
            opnds.add((tok.kind, tok.norm))
            n_opnds += 1
    return len(ops), len(opnds), n_ops, n_opnds


def halstead_difficulty(pou: m.Pou) -> float:
    eta1, eta2, _, big_n2 = halstead_counts(pou)
    if eta2 == 0:
        return 0.0
    return (eta1 / 2.0) * (big_n2 / eta2)


def _resolved_callees(pou: m.Pou) -> Iterable[str]:
    """Callee POU names: instance calls resolve to the instance's declared type."""
    for stmt in pou.walk():
        for site in call_sites(stmt.tokens):
            head = site.callee.split(".")[0]
            decl = pou.declared(head)
            if decl is not None and "." not in site.callee:
                yield decl.type_key.lower()
            elif decl is None:
                yield site.callee
            # member calls on instances (fb.Method()) target methods, not POUs


def fan_metrics(project: Iterable[m.Pou], target: m.Pou) -> Tuple[int, int]:
    """(fan_in, fan_out): distinct calling POUs, and call expressions inside target."""
    name = target.name.lower()
    fan_in = 0
    for pou in project:
        if pou is target or pou.name.lower() == name:
            continue
        if any(c == name for c in _resolved_callees(pou)):
            fan_in += 1
    fan_out = sum(1 for s in target.walk() for _ in call_sites(s.tokens))
    return fan_in, fan_out


def classic_metrics(pou: m.Pou, project: Optional[Iterable[m.Pou]] = None) -> ClassicMetrics:
    fan_in, fan_out = fan_metrics(project or (), pou)
    return ClassicMetrics(pou.sloc, mccabe(pou), halstead_difficulty(pou), fan_in, fan_out)


def percent_change(before: float, after: float) -> Optional[float]:
    """Signed change in percent; ``None`` marks an undefined change (before = 0)."""
    if before == 0:
        return None
    return (after - before) / before * 100.0


def format_percent(value: Optional[float]) -> str:
    if value is None:
        return "n/a"
    rounded = round(value, 1)
    if rounded == 0:
        return "→ 0%"
    arrow = "↑" if rounded > 0 else "↓"
    return f"{arrow} {abs(rounded):.1f}%"
