import pytest

from conftest import fixture_text
from micose.errors import LexError, MultiplePouError, ParseError
from micose.frontend import count_sloc, extract_inventory, parse_pou, split_pous, tokenize
from micose.frontend import model as m
from micose.frontend.lexer import IDENT, KEYWORD, LITERAL, OP


def kinds(text):
    return [(t.kind, t.norm) for t in tokenize(text)]


class TestLexer:
    def test_identifiers_are_case_insensitive(self):
        assert tokenize("MyVar")[0] == tokenize("myvar")[0]

    def test_keywords_upper_cased(self):
        assert kinds("if x then") == [(KEYWORD, "IF"), (IDENT, "x"), (KEYWORD, "THEN")]

    def test_nested_comments_and_pragmas_are_trivia(self):
        toks = tokenize("(* a (* b *) c *) {pragma} x // tail\n/* y */ z")
        assert [t.norm for t in toks] == ["x", "z"]

    def test_literal_classes(self):
        toks = tokenize("16#FF INT#5 T#1h_30m TOD#12:30:00 'it$'s' TRUE 2.5E3")
        assert [t.lit_class for t in toks] == ["numeric", "numeric", "time", "time", "string",
                                               "boolean", "numeric"]

    def test_time_literal_normalisation_ignores_underscores(self):
        assert tokenize("T#1h_30m")[0].norm == tokenize("t#1H30M")[0].norm

    def test_word_operators_and_ampersand(self):
        assert kinds("a & b OR NOT c MOD 2") == [
            (IDENT, "a"), (OP, "AND"), (IDENT, "b"), (OP, "OR"), (OP, "NOT"), (IDENT, "c"),
            (OP, "MOD"), (LITERAL, "2")]

    def test_direct_address_is_identifier(self):
        assert kinds("%IX0.1") == kinds("%ix0.1") == [(IDENT, "%IX0.1")]

    def test_unterminated_comment_strict_raises(self):
        with pytest.raises(LexError) as exc:
            tokenize("x := 1;\n(* open")
        assert exc.value.line == 2

    def test_unterminated_comment_non_strict(self):
        assert [t.norm for t in tokenize("x (* open", strict=False)] == ["x"]

    def test_sloc_skips_blank_and_comment_lines(self):
        text = "a := 1;\n\n(* c\n   d *)\n// e\nb := 2; (* f *)\n"
        assert count_sloc(text) == 2


class TestParser:
    def test_pou_kinds_and_return_type(self):
        assert parse_pou(fixture_text("assign.st")).kind == m.PRG
        assert parse_pou(fixture_text("increment.st")).kind == m.FB
        fc = parse_pou(fixture_text("scale.st"))
        assert fc.kind == m.FC and fc.return_type == "REAL"

    def test_declarations_by_section(self):
        pou = parse_pou(fixture_text("calls.st"))
        assert [d.name for d in pou.declarations(m.VAR_INPUT)] == ["run"]
        assert [d.name for d in pou.declarations(m.VAR_OUTPUT)] == ["done"]
        assert pou.declared("T1").type_key == "TON"

    def test_if_tree_and_depths(self):
        pou = parse_pou(fixture_text("nested.st"))
        (outer,) = pou.body
        assert outer.kind == m.IF and outer.depth == 0
        arms = [c for c in outer.children if c.kind == m.ELSIF_ARM]
        assert len(arms) == 1 and arms[0].depth == 1
        while_stmt = arms[0].children[0]
        assert while_stmt.kind == m.WHILE and while_stmt.depth == 2

    def test_case_arms(self):
        pou = parse_pou(fixture_text("case.st"))
        (case,) = pou.body
        assert [c.kind for c in case.children] == [m.CASE_ARM] * 3 + [m.ELSE_ARM]

    def test_repeat_and_for(self):
        pou = parse_pou(fixture_text("for_repeat.st"))
        assert [s.kind for s in pou.body] == [m.ASSIGN, m.FOR, m.REPEAT, m.ASSIGN]

    def test_call_statement(self):
        pou = parse_pou(fixture_text("calls.st"))
        assert pou.body[0].kind == m.CALL

    def test_syntax_error_recorded_with_line_and_recovery(self):
        text = "PROGRAM P\nVAR a : INT; END_VAR\na := 1;\na + ;\na := 2;\nEND_PROGRAM\n"
        pou = parse_pou(text)
        assert pou.diagnostics and pou.diagnostics[0].line == 4
        assert [s.kind for s in pou.body] == [m.ASSIGN, m.ASSIGN]

    def test_missing_header(self):
        with pytest.raises(ParseError):
            parse_pou("a := 1;")

    def test_multiple_pous_rejected_then_split(self):
        text = fixture_text("assign.st") + fixture_text("if_else.st")
        with pytest.raises(MultiplePouError):
            parse_pou(text)
        names = [parse_pou(chunk).name for chunk in split_pous(text)]
        assert names == ["P_Assign", "P_IfElse"]

    def test_split_single_pou_is_identity(self):
        text = fixture_text("case.st")
        assert split_pous(text) == [text]

    def test_header_word_in_comment_does_not_split(self):
        text = "(* FUNCTION_BLOCK in a comment *)\n" + fixture_text("assign.st")
        assert len(split_pous(text)) == 1


class TestInventory:
    def test_counts(self):
        inv = extract_inventory(parse_pou(fixture_text("calls.st")))
        assert inv.fb_instances == 1
        assert inv.internal_variables == 1          # v; t1 is an FB instance
        assert inv.statements[m.CALL] == 1
        assert inv.operators["*"] == 1
        assert inv.total_calls == 2                 # t1(...) and ABS(...)

    def test_grouping_parens_exclude_calls(self):
        inv = extract_inventory(parse_pou(fixture_text("scale.st")))
        assert inv.grouping_parens == 2
