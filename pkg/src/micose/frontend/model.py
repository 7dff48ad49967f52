from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

from micose.frontend.lexer import Token

PRG, FC, FB = "PRG", "FC", "FB"
POU_KINDS = (PRG, FC, FB)

VAR_INPUT = "VAR_INPUT"
VAR_OUTPUT = "VAR_OUTPUT"
VAR_IN_OUT = "VAR_IN_OUT"
VAR = "VAR"
VAR_GLOBAL = "VAR_GLOBAL"  # VAR_GLOBAL / VAR_EXTERNAL references
CONSTANT = "CONSTANT"
SECTIONS = (VAR_INPUT, VAR_OUTPUT, VAR_IN_OUT, VAR, VAR_GLOBAL, CONSTANT)

ASSIGN = "Assign"
IF = "If"
ELSIF_ARM = "Elsif-arm"
ELSE_ARM = "Else-arm"
CASE = "Case"
CASE_ARM = "Case-arm"
FOR = "For"
WHILE = "While"
REPEAT = "Repeat"
CALL = "Call"
EXIT = "Exit"
RETURN = "Return"
EMPTY = "Empty"
STATEMENT_KINDS = (
    ASSIGN, IF, ELSIF_ARM, ELSE_ARM, CASE, CASE_ARM, FOR, WHILE, REPEAT,
    CALL, EXIT, RETURN, EMPTY,
)
COMPOUND_KINDS = frozenset([IF, ELSIF_ARM, ELSE_ARM, CASE, CASE_ARM, FOR, WHILE, REPEAT])
# kinds whose header holds a condition/selector expression
CONDITIONED_KINDS = frozenset([IF, ELSIF_ARM, CASE, FOR, WHILE, REPEAT])


@dataclass(frozen=True)
class SourceUnit:
    path: str
    text: str
    encoding: str = "utf-8"


@dataclass(frozen=True)
class Declaration:
    name: str
    section: str
    datatype: str
    initializer: Optional[str] = None
    line: int = field(default=0, compare=False)

    @property
    def key(self) -> str:
        return self.name.lower()

    @property
    def type_key(self) -> str:
        return "".join(self.datatype.split()).upper()

    @property
    def init_key(self) -> Optional[str]:
        if self.initializer is None:
            return None
        return "".join(self.initializer.split()).upper()


@dataclass(frozen=True)
class Statement:
    """A statement node.

    ``tokens`` holds the node's own tokens (for compounds: the header, e.g.
    ``IF <cond> THEN``); nested statements live in ``children``. ``condition``
    is the slice of ``tokens`` forming the condition/selector expression.
    """

    kind: str
    tokens: Tuple[Token, ...] = ()
    children: Tuple["Statement", ...] = ()
    depth: int = 0
    condition: Tuple[Token, ...] = ()
    line: int = field(default=0, compare=False)

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()

    @property
    def signature(self):
        return _signature(self)


def _signature(stmt: Statement):
    return (stmt.kind, tuple((t.kind, t.norm) for t in stmt.tokens),
            tuple(_signature(c) for c in stmt.children))


@dataclass(frozen=True)
class Diagnostic:
    line: int
    message: str

    def __str__(self):
        return f"line {self.line}: {self.message}"


@dataclass(frozen=True)
class Pou:
    name: str
    kind: str
    interface: Tuple[Declaration, ...] = ()
    body: Tuple[Statement, ...] = ()
    sloc: int = 0
    body_tokens: Tuple[Token, ...] = field(default=(), repr=False)
    return_type: Optional[str] = None
    diagnostics: Tuple[Diagnostic, ...] = field(default=(), compare=False)

    def walk(self):
        for stmt in self.body:
            yield from stmt.walk()

    def declarations(self, section: str) -> List[Declaration]:
        return [d for d in self.interface if d.section == section]

    def declared(self, name: str) -> Optional[Declaration]:
        key = name.lower()
        for d in self.interface:
            if d.key == key:
                return d
        return None
