"""AST construction rules, pretty-printing, and the parse round trip."""

import random

import pytest

from conftest import SURFACE_FIXTURES, rand_line
from tabledsl import ast
from tabledsl.ast import (
    AssignTarget,
    Bool,
    BoolKind,
    Cmp,
    CmpOp,
    Count,
    DataframeRef,
    DslLine,
    DslType,
    Ident,
    Member,
    Num,
    SchemaDef,
    SelectCols,
    Show,
    StartSession,
    TargetOption,
    pretty_print,
    structural_eq,
)
from tabledsl.parser import ParseError, parse_line


def line(assign, source, *chain):
    return DslLine(
        AssignTarget(assign) if assign else None,
        DataframeRef(source) if source else None,
        chain,
    )


class TestPrettyPrint:
    def test_select_count_chain(self):
        tree = line("x", "y", SelectCols(("a", "b", "c")), Count())
        assert pretty_print(tree) == "x = on y : select_cols a, b, c : count"

    def test_bare_show(self):
        tree = line(None, "df", Show())
        assert pretty_print(tree) == "on df : show"

    def test_schema_statement(self):
        tree = line("s", None,
                    SchemaDef((("col1", DslType.INT), ("col2", DslType.STR))))
        assert pretty_print(tree) == "s = schema col1 of int, col2 of str"

    def test_string_escaping_round_trips(self):
        tree = DslLine(None, None, (StartSession("it's a \\ test"),))
        text = pretty_print(tree)
        reparsed = parse_line(text)
        assert not isinstance(reparsed, ParseError)
        assert structural_eq(reparsed, tree)

    def test_deterministic(self):
        tree = line("x", "y", SelectCols(("a",)))
        assert pretty_print(tree) == pretty_print(line("x", "y", SelectCols(("a",))))


class TestStructuralEq:
    def test_identical_trees(self):
        a = line("x", "y", SelectCols(("a",)), Count())
        b = line("x", "y", SelectCols(("a",)), Count())
        assert structural_eq(a, b)

    def test_chain_order_matters(self):
        a = line("x", "y", ast.DropDuplicates(), ast.SortBy("c"))
        b = line("x", "y", ast.SortBy("c"), ast.DropDuplicates())
        assert not structural_eq(a, b)

    def test_field_differs(self):
        a = Cmp("c", CmpOp.EQ, Ident("m"))
        b = Cmp("c", CmpOp.EQ, Ident("n"))
        assert a != b


class TestInvariants:
    def test_empty_chain_rejected(self):
        with pytest.raises(ValueError):
            DslLine(None, DataframeRef("df"), ())

    def test_terminal_must_be_last(self):
        with pytest.raises(ValueError):
            line(None, "df", Show(), Count())

    def test_df_op_needs_source(self):
        with pytest.raises(ValueError):
            DslLine(None, None, (SelectCols(("a",)),))

    def test_meta_ops_stand_alone(self):
        with pytest.raises(ValueError):
            DslLine(AssignTarget("x"), None, (StartSession("s"),))
        with pytest.raises(ValueError):
            DslLine(None, DataframeRef("df"), (TargetOption(ast.Target.SPARK),))

    def test_rename_duplicate_source_rejected(self):
        with pytest.raises(ValueError):
            ast.RenameCols((("a", "b"), ("a", "c")))

    def test_member_needs_values(self):
        with pytest.raises(ValueError):
            Member("c", False, ())

    def test_return_top_n_positive(self):
        with pytest.raises(ValueError):
            ast.ReturnTopN(0)

    def test_and_cannot_hold_or_child(self):
        a = Cmp("a", CmpOp.EQ, Num("1"))
        b = Cmp("b", CmpOp.EQ, Num("2"))
        c = Cmp("c", CmpOp.EQ, Num("3"))
        with pytest.raises(ValueError):
            Bool(BoolKind.AND, Bool(BoolKind.OR, a, b), c)
        with pytest.raises(ValueError):
            Bool(BoolKind.AND, a, Bool(BoolKind.AND, b, c))

    def test_bad_identifier_rejected(self):
        with pytest.raises(ValueError):
            AssignTarget("9lives")
        with pytest.raises(ValueError):
            Ident("not an ident")

    def test_num_text_validated(self):
        with pytest.raises(ValueError):
            Num("1.2.3")


class TestRoundTrip:
    def test_fixture_statements(self):
        for text in SURFACE_FIXTURES:
            first = parse_line(text)
            assert not isinstance(first, ParseError), f"{text}: {first}"
            printed = pretty_print(first)
            second = parse_line(printed)
            assert not isinstance(second, ParseError), f"{printed}: {second}"
            assert structural_eq(first, second), text

    def test_random_trees(self):
        rng = random.Random(20240817)
        for _ in range(500):
            tree = rand_line(rng)
            printed = pretty_print(tree)
            reparsed = parse_line(printed)
            assert not isinstance(reparsed, ParseError), f"{printed}: {reparsed}"
            assert structural_eq(reparsed, tree), printed
            # printing the reparsed tree is byte-identical
            assert pretty_print(reparsed) == printed
