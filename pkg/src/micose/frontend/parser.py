"""Statement-level recursive-descent parser for ST POUs.

Expressions stay flat token lists. Local syntax errors are recorded as
diagnostics and parsing resumes at the next ``;`` or END keyword.
"""
from __future__ import annotations

import re
from typing import List, Optional, Sequence

from micose.errors import MultiplePouError, ParseError
from micose.frontend import model as m
from micose.frontend.lexer import IDENT, KEYWORD, LITERAL, OP, SEP, Token, sloc_of_tokens, tokenize

HEADERS = {"PROGRAM": (m.PRG, "END_PROGRAM"),
           "FUNCTION_BLOCK": (m.FB, "END_FUNCTION_BLOCK"),
           "FUNCTION": (m.FC, "END_FUNCTION")}

_VAR_SECTIONS = {
    "VAR_INPUT": m.VAR_INPUT, "VAR_OUTPUT": m.VAR_OUTPUT, "VAR_IN_OUT": m.VAR_IN_OUT,
    "VAR": m.VAR, "VAR_TEMP": m.VAR, "VAR_STAT": m.VAR, "VAR_INST": m.VAR,
    "VAR_GLOBAL": m.VAR_GLOBAL, "VAR_EXTERNAL": m.VAR_GLOBAL, "VAR_CONFIG": m.VAR_GLOBAL,
}
_QUALIFIERS = {"CONSTANT", "RETAIN", "NON_RETAIN", "PERSISTENT"}
_MODIFIERS = {"public", "private", "protected", "internal", "abstract", "final"}
_SKIPPED_BLOCKS = {"METHOD": "END_METHOD", "ACTION": "END_ACTION",
                   "PROPERTY": "END_PROPERTY", "INTERFACE": "END_INTERFACE",
                   "TYPE": "END_TYPE"}


class _Syntax(Exception):
    def __init__(self, message, line, recovered=False):
        super().__init__(message)
        self.message = message
        self.line = line
        self.recovered = recovered


def _render(tokens: Sequence[Token]) -> str:
    return " ".join(t.text for t in tokens)


def _is(tok: Optional[Token], kind: str, norm: str) -> bool:
    return tok is not None and tok.kind == kind and tok.norm == norm


_UNARY = {"-", "+", "NOT"}


def _expr_problem(toks: Sequence[Token]) -> Optional[str]:
    """Why a flat expression is malformed, or None; only catches dangling operators."""
    if not toks:
        return "missing expression"
    if toks[-1].kind == OP:
        return f"expression ends with operator {toks[-1].text!r}"
    if toks[0].kind == OP and toks[0].norm not in _UNARY:
        return f"expression starts with operator {toks[0].text!r}"
    for a, b in zip(toks, toks[1:]):
        if a.kind == OP and b.kind == OP and b.norm not in _UNARY:
            return f"operator {b.text!r} follows operator {a.text!r}"
    return None


def _is_block_end(tok: Token) -> bool:
    return tok.kind == KEYWORD and (tok.norm.startswith("END_") or tok.norm in ("ELSIF", "ELSE", "UNTIL"))


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.toks = tokens
        self.pos = 0
        self.diagnostics: List[m.Diagnostic] = []

    # token access
    def peek(self, k: int = 0) -> Optional[Token]:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def next(self) -> Token:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def at_kw(self, *names: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == KEYWORD and tok.norm in names

    def _line(self) -> int:
        tok = self.peek()
        if tok is None:
            return self.toks[-1].line if self.toks else 0
        return tok.line

    def diag(self, line: int, message: str):
        self.diagnostics.append(m.Diagnostic(line, message))

    def check_expr(self, toks: Sequence[Token], line: int, where: str):
        problem = _expr_problem(toks)
        if problem:
            self.diag(line, f"{where}: {problem}")

    def skip_semicolon(self):
        if _is(self.peek(), SEP, ";"):
            self.pos += 1

    def recover(self, terms):
        while (tok := self.peek()) is not None:
            if _is(tok, SEP, ";"):
                self.pos += 1
                return
            if _is_block_end(tok):
                if tok.norm in terms:
                    return
                self.pos += 1
                self.skip_semicolon()
                return
            self.pos += 1

    def skip_block(self, end_kw: str):
        start = self.next()
        while (tok := self.peek()) is not None:
            self.pos += 1
            if tok.kind == KEYWORD and tok.norm == end_kw:
                self.skip_semicolon()
                return
        self.diag(start.line, f"missing {end_kw}")

    # header and interface
    def header(self):
        kw = self.next()
        kind, end_kw = HEADERS[kw.norm]
        while (tok := self.peek()) is not None and tok.kind == IDENT and tok.norm in _MODIFIERS \
                and self.peek(1) is not None and self.peek(1).kind == IDENT:
            self.pos += 1
        tok = self.peek()
        if tok is None or tok.kind != IDENT:
            raise ParseError(f"{kw.text} without a name", kw.line)
        name = self.next().text
        return_type = None
        if kind == m.FC and _is(self.peek(), SEP, ":"):
            self.pos += 1
            start = self.pos
            if self.peek() is not None:
                self.pos += 1
            if _is(self.peek(), SEP, "(") or _is(self.peek(), SEP, "["):
                self._balanced()
            return_type = _render(self.toks[start:self.pos])
        while self.at_kw("EXTENDS", "IMPLEMENTS"):
            self.pos += 1
            while (tok := self.peek()) is not None and (tok.kind == IDENT or _is(tok, SEP, ",") or _is(tok, SEP, ".")):
                self.pos += 1
        self.skip_semicolon()
        return name, kind, end_kw, return_type

    def _balanced(self):
        depth = 0
        while (tok := self.peek()) is not None:
            if tok.kind == SEP and tok.norm in "([":
                depth += 1
            elif tok.kind == SEP and tok.norm in ")]":
                depth -= 1
            self.pos += 1
            if depth <= 0:
                return

    def var_block(self) -> List[m.Declaration]:
        kw = self.next()
        section = _VAR_SECTIONS[kw.norm]
        while self.at_kw(*_QUALIFIERS):
            if self.next().norm == "CONSTANT" and section == m.VAR:
                section = m.CONSTANT
        decls: List[m.Declaration] = []
        while True:
            tok = self.peek()
            if tok is None:
                self.diag(kw.line, f"missing END_VAR for {kw.text}")
                return decls
            if self.at_kw("END_VAR"):
                self.pos += 1
                self.skip_semicolon()
                return decls
            if tok.kind == KEYWORD and tok.norm != "END_STRUCT":
                if tok.norm in _VAR_SECTIONS or tok.norm.startswith("END_"):
                    self.diag(kw.line, f"missing END_VAR for {kw.text}")
                    return decls
            try:
                decls.extend(self.declaration(section))
            except _Syntax as err:
                self.diag(err.line, err.message)
                self._recover_decl()

    def _recover_decl(self):
        while (tok := self.peek()) is not None:
            if _is(tok, SEP, ";"):
                self.pos += 1
                return
            if self.at_kw("END_VAR"):
                return
            self.pos += 1

    def declaration(self, section: str) -> List[m.Declaration]:
        first = self.peek()
        if _is(first, SEP, ";"):
            self.pos += 1
            return []
        names = []
        while True:
            tok = self.peek()
            if tok is None or tok.kind != IDENT:
                raise _Syntax("expected variable name", first.line)
            names.append(self.next())
            if _is(self.peek(), SEP, ","):
                self.pos += 1
                continue
            break
        if self.at_kw("AT"):
            self.pos += 1
            if self.peek() is not None:
                self.pos += 1
        if not _is(self.peek(), SEP, ":"):
            raise _Syntax("expected ':' in declaration", first.line)
        self.pos += 1
        dtype = self._collect_decl_part(stop_at_assign=True)
        if not dtype:
            raise _Syntax("missing data type", first.line)
        init = None
        if _is(self.peek(), OP, ":="):
            self.pos += 1
            init = _render(self._collect_decl_part(stop_at_assign=False))
        if not _is(self.peek(), SEP, ";"):
            raise _Syntax("expected ';' after declaration", first.line)
        self.pos += 1
        return [m.Declaration(n.text, section, _render(dtype), init, n.line) for n in names]

    def _collect_decl_part(self, stop_at_assign: bool) -> List[Token]:
        out, depth = [], 0
        while (tok := self.peek()) is not None:
            if depth == 0 and _is(tok, SEP, ";"):
                break
            if depth == 0 and stop_at_assign and _is(tok, OP, ":="):
                break
            if tok.kind == KEYWORD and tok.norm == "END_VAR":
                break
            if tok.kind == SEP and tok.norm in "([":
                depth += 1
            elif tok.kind == SEP and tok.norm in ")]":
                depth -= 1
            elif tok.kind == KEYWORD and tok.norm == "STRUCT":
                depth += 1
            elif tok.kind == KEYWORD and tok.norm == "END_STRUCT":
                depth -= 1
            out.append(self.next())
        return out

    # statements
    def stmt_list(self, terms, depth: int, case_mode: bool = False) -> List[m.Statement]:
        out: List[m.Statement] = []
        while (tok := self.peek()) is not None:
            if tok.kind == KEYWORD and tok.norm in terms:
                break
            if case_mode and self._case_label_ahead():
                break
            start = self.pos
            try:
                stmt = self.statement(depth)
            except _Syntax as err:
                self.diag(err.line, err.message)
                if err.recovered:
                    continue
                if self.pos == start and _is_block_end(tok) and tok.norm not in terms:
                    self.pos += 1
                    self.skip_semicolon()
                else:
                    self.recover(terms)
                continue
            if stmt is not None:
                out.append(stmt)
        return out

    def _case_label_ahead(self) -> bool:
        i, seen = self.pos, 0
        while i < len(self.toks):
            tok = self.toks[i]
            if _is(tok, SEP, ":"):
                return seen > 0
            if tok.kind in (LITERAL, IDENT) or (tok.kind == SEP and tok.norm in (",", "..", ".")) \
                    or _is(tok, OP, "-"):
                seen += 1
                i += 1
                continue
            return False
        return False

    def _until(self, kw: str, allowed=()) -> List[Token]:
        out = []
        start_line = self._line()
        while (tok := self.peek()) is not None:
            if tok.kind == KEYWORD:
                if tok.norm == kw:
                    return out
                if tok.norm not in allowed:
                    break
            if _is(tok, SEP, ";"):
                break
            out.append(self.next())
        raise _Syntax(f"expected {kw}", start_line)

    def _expect_end(self, kw: str, opener: Token):
        if self.at_kw(kw):
            self.pos += 1
            self.skip_semicolon()
        else:
            self.diag(opener.line, f"missing {kw}")

    def statement(self, depth: int) -> Optional[m.Statement]:
        tok = self.peek()
        if _is(tok, SEP, ";"):
            self.pos += 1
            return m.Statement(m.EMPTY, (), (), depth, line=tok.line)
        if tok.kind == KEYWORD:
            word = tok.norm
            if word == "IF":
                return self._if(depth)
            if word == "CASE":
                return self._case(depth)
            if word == "FOR":
                return self._loop(depth, m.FOR, "DO", "END_FOR", allowed=("TO", "BY"))
            if word == "WHILE":
                return self._loop(depth, m.WHILE, "DO", "END_WHILE")
            if word == "REPEAT":
                return self._repeat(depth)
            if word in ("EXIT", "CONTINUE", "RETURN"):
                self.pos += 1
                self.skip_semicolon()
                kind = m.RETURN if word == "RETURN" else m.EXIT
                return m.Statement(kind, (tok,), (), depth, line=tok.line)
            if word in _SKIPPED_BLOCKS:
                self.skip_block(_SKIPPED_BLOCKS[word])
                return None
            if word in _VAR_SECTIONS:
                self.var_block()
                raise _Syntax(f"declaration section {tok.text} inside body", tok.line)
            raise _Syntax(f"unexpected keyword {tok.text}", tok.line)
        return self._simple(depth)

    def _simple(self, depth: int) -> m.Statement:
        first = self.peek()
        toks, paren = [], 0
        terminated = False
        while (tok := self.peek()) is not None:
            if tok.kind == KEYWORD:
                break
            if paren == 0 and _is(tok, SEP, ";"):
                self.pos += 1
                terminated = True
                break
            if tok.kind == SEP and tok.norm in "([":
                paren += 1
            elif tok.kind == SEP and tok.norm in ")]":
                paren -= 1
            toks.append(self.next())
        if not toks:
            raise _Syntax("empty statement expression", first.line)
        top_assign = False
        depth_now = 0
        for t in toks:
            if t.kind == SEP and t.norm in "([":
                depth_now += 1
            elif t.kind == SEP and t.norm in ")]":
                depth_now -= 1
            elif depth_now == 0 and _is(t, OP, ":="):
                top_assign = True
                break
        if top_assign:
            kind = m.ASSIGN
            at = next(i for i, t in enumerate(toks) if _is(t, OP, ":="))
            self.check_expr(toks[:at], first.line, "assignment target")
            self.check_expr(toks[at + 1:], first.line, "assignment")
        elif toks[0].kind == IDENT and _is(toks[-1], SEP, ")") and any(_is(t, SEP, "(") for t in toks):
            kind = m.CALL
        else:
            raise _Syntax(f"unrecognized statement starting with {first.text!r}", first.line,
                          recovered=terminated)
        if not terminated:
            self.diag(first.line, "missing ';'")
        return m.Statement(kind, tuple(toks), (), depth, line=first.line)

    def _if(self, depth: int) -> m.Statement:
        start = self.next()
        cond = self._until("THEN")
        self.check_expr(cond, start.line, "IF condition")
        then = self.next()
        children = self.stmt_list({"ELSIF", "ELSE", "END_IF"}, depth + 1)
        arms = []
        while self.at_kw("ELSIF"):
            kw = self.next()
            c = self._until("THEN")
            self.check_expr(c, kw.line, "ELSIF condition")
            th = self.next()
            body = self.stmt_list({"ELSIF", "ELSE", "END_IF"}, depth + 2)
            arms.append(m.Statement(m.ELSIF_ARM, (kw, *c, th), tuple(body), depth + 1, tuple(c), kw.line))
        if self.at_kw("ELSE"):
            kw = self.next()
            body = self.stmt_list({"END_IF"}, depth + 2)
            arms.append(m.Statement(m.ELSE_ARM, (kw,), tuple(body), depth + 1, (), kw.line))
        self._expect_end("END_IF", start)
        return m.Statement(m.IF, (start, *cond, then), tuple(children + arms), depth, tuple(cond), start.line)

    def _loop(self, depth, kind, opener_kw, end_kw, allowed=()) -> m.Statement:
        start = self.next()
        head = self._until(opener_kw, allowed)
        if kind == m.WHILE:
            self.check_expr(head, start.line, "WHILE condition")
        do = self.next()
        body = self.stmt_list({end_kw}, depth + 1)
        self._expect_end(end_kw, start)
        return m.Statement(kind, (start, *head, do), tuple(body), depth, tuple(head), start.line)

    def _repeat(self, depth: int) -> m.Statement:
        start = self.next()
        body = self.stmt_list({"UNTIL", "END_REPEAT"}, depth + 1)
        tokens, cond = (start,), ()
        if self.at_kw("UNTIL"):
            until = self.next()
            cond = tuple(self._until("END_REPEAT"))
            self.check_expr(cond, until.line, "UNTIL condition")
            tokens = (start, until, *cond)
        else:
            self.diag(start.line, "missing UNTIL")
        self._expect_end("END_REPEAT", start)
        return m.Statement(m.REPEAT, tokens, tuple(body), depth, cond, start.line)

    def _case(self, depth: int) -> m.Statement:
        start = self.next()
        selector = self._until("OF")
        of = self.next()
        arms = []
        while (tok := self.peek()) is not None and not self.at_kw("END_CASE"):
            if self.at_kw("ELSE"):
                kw = self.next()
                body = self.stmt_list({"END_CASE"}, depth + 2)
                arms.append(m.Statement(m.ELSE_ARM, (kw,), tuple(body), depth + 1, (), kw.line))
                continue
            if self._case_label_ahead():
                labels = []
                while not _is(self.peek(), SEP, ":"):
                    labels.append(self.next())
                colon = self.next()
                body = self.stmt_list({"END_CASE", "ELSE"}, depth + 2, case_mode=True)
                arms.append(m.Statement(m.CASE_ARM, (*labels, colon), tuple(body), depth + 1,
                                        tuple(labels), labels[0].line))
                continue
            if _is_block_end(tok):
                break
            self.diag(tok.line, "expected case label")
            self.recover({"END_CASE", "ELSE"})
        self._expect_end("END_CASE", start)
        return m.Statement(m.CASE, (start, *selector, of), tuple(arms), depth, tuple(selector), start.line)


def _header_positions(tokens: Sequence[Token]) -> List[int]:
    return [i for i, t in enumerate(tokens) if t.kind == KEYWORD and t.norm in HEADERS]


def parse_pou(text: str) -> m.Pou:
    """Parse a text holding exactly one POU declaration block."""
    tokens = tokenize(text)
    heads = _header_positions(tokens)
    if not heads:
        raise ParseError("no POU header (PROGRAM, FUNCTION_BLOCK or FUNCTION) found")
    if len(heads) > 1:
        names = [tokens[i + 1].text for i in heads if i + 1 < len(tokens)]
        raise MultiplePouError(
            f"text holds {len(heads)} POUs ({', '.join(names)}); split it with split_pous first",
            tokens[heads[1]].line)
    p = _Parser(tokens)
    p.pos = heads[0]
    name, kind, end_kw, return_type = p.header()

    interface: List[m.Declaration] = []
    while p.at_kw(*_VAR_SECTIONS):
        interface.extend(p.var_block())
    seen = set()
    unique = []
    for decl in interface:
        key = (decl.section, decl.key)
        if key in seen:
            p.diag(decl.line, f"duplicate declaration of {decl.name} in {decl.section}")
            continue
        seen.add(key)
        unique.append(decl)

    body_start = p.pos
    body = p.stmt_list({end_kw}, 0)
    body_end = p.pos
    if p.at_kw(end_kw):
        p.pos += 1
    else:
        p.diag(p._line(), f"missing {end_kw}")
    return m.Pou(
        name=name, kind=kind, interface=tuple(unique), body=tuple(body),
        sloc=sloc_of_tokens(tokens), body_tokens=tuple(tokens[body_start:body_end]),
        return_type=return_type, diagnostics=tuple(p.diagnostics),
    )


_HEADER_WORD = re.compile(r"\b(?:PROGRAM|FUNCTION_BLOCK|FUNCTION)\b", re.IGNORECASE)


def split_pous(text: str) -> List[str]:
    """Split a multi-POU text into one chunk per POU, cut at header lines.

    Text before the first header (type declarations, comments) stays with
    the first chunk.
    """
    if len(_HEADER_WORD.findall(text)) <= 1:
        return [text]       # cheap pre-check; comments can only inflate the count
    tokens = tokenize(text, strict=False)
    heads = _header_positions(tokens)
    if len(heads) <= 1:
        return [text]
    lines = text.splitlines(keepends=True)
    starts = [tokens[i].line for i in heads]
    starts[0] = 1
    bounds = starts + [len(lines) + 1]
    return ["".join(lines[bounds[k] - 1:bounds[k + 1] - 1]) for k in range(len(starts))]
