"""Tokenizer for IEC 61131-3 Structured Text.

Comments (``(* *)``, ``/* */``, ``//``) and vendor pragmas (``{ }``) are
consumed as trivia. Keywords are matched case-insensitively; identifiers keep
their spelling in ``text`` but compare through the lower-cased ``norm``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, List, Optional

from micose.errors import LexError

KEYWORD = "KEYWORD"
IDENT = "IDENT"
OP = "OP"
SEP = "SEP"
LITERAL = "LITERAL"
TRIVIA = "TRIVIA"

LIT_NUMERIC = "numeric"
LIT_TIME = "time"
LIT_STRING = "string"
LIT_BOOLEAN = "boolean"
LITERAL_CLASSES = (LIT_NUMERIC, LIT_TIME, LIT_STRING, LIT_BOOLEAN)

KEYWORDS = frozenset("""
    PROGRAM END_PROGRAM FUNCTION END_FUNCTION FUNCTION_BLOCK END_FUNCTION_BLOCK
    METHOD END_METHOD ACTION END_ACTION PROPERTY END_PROPERTY INTERFACE END_INTERFACE
    VAR VAR_INPUT VAR_OUTPUT VAR_IN_OUT VAR_TEMP VAR_STAT VAR_INST VAR_GLOBAL
    VAR_EXTERNAL VAR_CONFIG END_VAR CONSTANT RETAIN NON_RETAIN PERSISTENT AT
    IF THEN ELSIF ELSE END_IF CASE OF END_CASE FOR TO BY DO END_FOR
    WHILE END_WHILE REPEAT UNTIL END_REPEAT EXIT RETURN CONTINUE
    ARRAY STRUCT END_STRUCT TYPE END_TYPE POINTER REFERENCE
    EXTENDS IMPLEMENTS
""".split())

# Word operators are emitted as OP tokens, not keywords.
WORD_OPERATORS = frozenset(["AND", "OR", "XOR", "NOT", "MOD", "AND_THEN", "OR_ELSE"])

# symbols ordered longest first
_SYMBOLS = [
    (":=", OP), ("=>", OP), ("<>", OP), ("<=", OP), (">=", OP), ("**", OP),
    ("..", SEP),
    ("+", OP), ("-", OP), ("*", OP), ("/", OP), ("=", OP), ("<", OP), (">", OP),
    ("&", OP), ("^", OP),
    ("(", SEP), (")", SEP), ("[", SEP), ("]", SEP), (",", SEP), (";", SEP),
    (":", SEP), (".", SEP),
]

_TIME_PREFIX = (
    r"(?:LTIME|TIME_OF_DAY|DATE_AND_TIME|TIME|DATE|LTOD|LDT|TOD|LT|DT|T|D)"
)
_TIME_RE = re.compile(_TIME_PREFIX + r"#[-+]?[0-9A-Za-z_.:\-]+", re.IGNORECASE)
_BASED_RE = re.compile(r"(?:2|8|16)#[0-9A-Fa-f_]+")
_NUMBER_RE = re.compile(r"\d[\d_]*(?:\.\d[\d_]*)?(?:[eE][-+]?\d+)?")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ADDRESS_RE = re.compile(r"%[IQM][XBWDL]?[\d.*]*", re.IGNORECASE)

_NUMERIC_TYPES = frozenset("""
    SINT INT DINT LINT USINT UINT UDINT ULINT REAL LREAL BYTE WORD DWORD LWORD
""".split())


@dataclass(frozen=True)
class Token:
    """One lexical token. Equality ignores source spelling and position."""

    kind: str
    norm: str
    lit_class: Optional[str] = None
    text: str = field(default="", compare=False)
    line: int = field(default=0, compare=False)
    end_line: int = field(default=0, compare=False)

    def __repr__(self):
        return f"{self.kind.lower()} {self.text}@{self.line}"


def _literal_norm(text: str) -> str:
    return text.replace("_", "").upper()


class _Scanner:
    def __init__(self, text: str, strict: bool):
        self.text = text
        self.strict = strict
        self.pos = 0
        self.line = 1

    def _advance(self, n: int) -> str:
        chunk = self.text[self.pos:self.pos + n]
        self.line += chunk.count("\n")
        self.pos += n
        return chunk

    def _fail(self, message: str, line: int):
        raise LexError(message, line)

    def _block_comment(self, opener: str, closer: str, nested: bool) -> str:
        start, line = self.pos, self.line
        self._advance(len(opener))
        depth = 1
        text = self.text
        while depth:
            if self.pos >= len(text):
                if self.strict:
                    self._fail(f"unterminated comment opened with {opener!r}", line)
                break
            if text.startswith(closer, self.pos):
                depth -= 1
                self._advance(len(closer))
            elif nested and text.startswith(opener, self.pos):
                depth += 1
                self._advance(len(opener))
            else:
                self._advance(1)
        return text[start:self.pos]

    def _string(self, quote: str) -> str:
        start, line = self.pos, self.line
        text = self.text
        i = self.pos + 1
        while True:
            if i >= len(text) or text[i] == "\n":
                if self.strict:
                    self._fail("unterminated string literal", line)
                i = min(i, len(text))
                break
            ch = text[i]
            if ch == "$":
                i += 2
                continue
            if ch == quote:
                i += 1
                break
            i += 1
        self._advance(i - start)
        return text[start:self.pos]

    def tokens(self) -> Iterator[Token]:
        text = self.text
        n = len(text)
        while self.pos < n:
            ch = text[self.pos]
            line = self.line
            if ch in " \t\r\n\f\v":
                self._advance(1)
                continue
            if text.startswith("(*", self.pos):
                body = self._block_comment("(*", "*)", nested=True)
                yield Token(TRIVIA, body, text=body, line=line, end_line=self.line)
                continue
            if text.startswith("/*", self.pos):
                body = self._block_comment("/*", "*/", nested=False)
                yield Token(TRIVIA, body, text=body, line=line, end_line=self.line)
                continue
            if text.startswith("//", self.pos):
                end = text.find("\n", self.pos)
                end = n if end < 0 else end
                body = self._advance(end - self.pos)
                yield Token(TRIVIA, body, text=body, line=line, end_line=line)
                continue
            if ch == "{":
                body = self._block_comment("{", "}", nested=False)
                yield Token(TRIVIA, body, text=body, line=line, end_line=self.line)
                continue
            if ch in "'\"":
                body = self._string(ch)
                yield Token(LITERAL, body, LIT_STRING, body, line, self.line)
                continue

            m = _TIME_RE.match(text, self.pos)
            if m and not (self.pos and (text[self.pos - 1].isalnum() or text[self.pos - 1] == "_")):
                body = self._advance(m.end() - self.pos)
                yield Token(LITERAL, _literal_norm(body), LIT_TIME, body, line, line)
                continue
            m = _BASED_RE.match(text, self.pos)
            if m:
                body = self._advance(m.end() - self.pos)
                yield Token(LITERAL, _literal_norm(body), LIT_NUMERIC, body, line, line)
                continue
            m = _NUMBER_RE.match(text, self.pos)
            if m:
                body = self._advance(m.end() - self.pos)
                yield Token(LITERAL, _literal_norm(body), LIT_NUMERIC, body, line, line)
                continue
            m = _ADDRESS_RE.match(text, self.pos)
            if m and m.end() > self.pos + 1:
                body = self._advance(m.end() - self.pos)
                yield Token(IDENT, body.upper(), text=body, line=line, end_line=line)
                continue
            m = _IDENT_RE.match(text, self.pos)
            if m:
                word = m.group(0)
                upper = word.upper()
                after = m.end()
                if after < n and text[after] == "#":
                    # typed literal such as INT#5, BOOL#TRUE, E_State#Idle
                    rest = re.compile(r"#[-+]?[0-9A-Za-z_.]+").match(text, after)
                    if rest:
                        body = self._advance(rest.end() - self.pos)
                        value = rest.group(0)[1:].upper()
                        if upper == "BOOL" or value in ("TRUE", "FALSE"):
                            cls = LIT_BOOLEAN
                        elif upper in _NUMERIC_TYPES:
                            cls = LIT_NUMERIC
                        else:
                            yield Token(IDENT, body.lower(), text=body, line=line, end_line=line)
                            continue
                        yield Token(LITERAL, _literal_norm(body), cls, body, line, line)
                        continue
                body = self._advance(len(word))
                if upper in ("TRUE", "FALSE"):
                    yield Token(LITERAL, upper, LIT_BOOLEAN, body, line, line)
                elif upper in WORD_OPERATORS:
                    yield Token(OP, upper, text=body, line=line, end_line=line)
                elif upper in KEYWORDS:
                    yield Token(KEYWORD, upper, text=body, line=line, end_line=line)
                else:
                    yield Token(IDENT, word.lower(), text=body, line=line, end_line=line)
                continue
            for sym, kind in _SYMBOLS:
                if text.startswith(sym, self.pos):
                    self._advance(len(sym))
                    norm = "AND" if sym == "&" else sym
                    yield Token(kind, norm, text=sym, line=line, end_line=line)
                    break
            else:
                if self.strict:
                    self._fail(f"unexpected character {ch!r}", line)
                self._advance(1)


def tokenize(text: str, keep_trivia: bool = False, strict: bool = True) -> List[Token]:
    """Split ST source into tokens in source order.

    With ``strict=False`` unterminated comments/strings run to end of input and
    stray characters are dropped instead of raising :class:`LexError`.
    """
    toks = _Scanner(text, strict).tokens()
    if keep_trivia:
        return list(toks)
    return [t for t in toks if t.kind != TRIVIA]


def sloc_of_tokens(tokens) -> int:
    lines = set()
    for tok in tokens:
        if tok.kind != TRIVIA:
            lines.update(range(tok.line, max(tok.line, tok.end_line) + 1))
    return len(lines)


def count_sloc(text: str) -> int:
    """Count lines carrying at least one non-comment token."""
    return sloc_of_tokens(tokenize(text, strict=False))
