"""Shared fixtures: the DSL surface as statements, and a random-tree builder."""

from __future__ import annotations

import random

from tabledsl import ast
from tabledsl.parser import KEYWORDS

# One statement per DSL surface form: every keyword row of the language
# overview, the generated-code examples, and the chained inspection example.
SURFACE_FIXTURES = [
    "result = load as json 'some_path.json'",
    "on df : save as csv to 'some_path.csv'",
    "result = on df : select_cols a, b, c",
    "result = on df : select_rows col1 == m or col2 < 3",
    "result = on df : select_rows col1 > 0 and col3 in [v1, v2, v3]",
    "result = on df : drop_cols x, y, z",
    "result = on df : drop_rows col1 > 0 and col2 not in [v1, v2]",
    "result = on df : group_by col1 apply sum",
    "result = on df : group_by col1, col2 apply min",
    "result = on df : on_missing fill_with value",
    "result = on df : on_missing drop_rows",
    "result = on df : replace old_value by new_value",
    "result = on df : apply_fun function on cols",
    "result = on df : apply_fun function on rows",
    "result = on df : append_col col_name",
    "result = on df : sort_by col_name",
    "result = on df : drop_duplicates",
    "result = on df : rename_cols c1 to p, c2 to q",
    "on df : show",
    "on df : describe",
    "on df : return_top_N 10",
    "on df : select_rows col1 == m : count",
    "start_session named 'session name'",
    "stop_session",
    "s = schema col1 of int, col2 of str",
    "result = load 'some_path.txt' with_schema s",
    "result = on df : append_row col_name default default_val",
    "target_code = spark",
    "target_code = pandas",
    "x = load as csv some_path",
    "x = load as csv some_path with_schema S",
    "x = on y : select_cols a, b, c : count",
    "x = on y : select_rows col1 == m and col3 in [v1, v2, v3]",
    "x = on y : rename_cols c1 to p, c2 to q",
    "x = on y : select_cols a, b, c : group_by b apply unique : show",
]


# ---------------------------------------------------------------------------
# Random valid statements (seeded; used for round-trip and totality checks)

_STR_ALPHABET = "abc XYZ_09.'\\-/"


def rand_ident(rng: random.Random) -> str:
    while True:
        head = rng.choice("abcdefghijklmnopqrstuvwxyz_")
        body = "".join(rng.choice("abcdefghijklmnopqrstuvwxyz_0123456789")
                       for _ in range(rng.randrange(0, 8)))
        name = head + body
        if name not in KEYWORDS:
            return name


def rand_number_text(rng: random.Random) -> str:
    sign = rng.choice(["", "", "", "-", "+"])
    whole = str(rng.randrange(0, 1000))
    if rng.random() < 0.4:
        return f"{sign}{whole}.{rng.randrange(0, 100):02d}"
    return sign + whole


def rand_scalar(rng: random.Random) -> ast.Literal:
    pick = rng.randrange(3)
    if pick == 0:
        return ast.Ident(rand_ident(rng))
    if pick == 1:
        content = "".join(rng.choice(_STR_ALPHABET) for _ in range(rng.randrange(0, 12)))
        return ast.Str(content)
    return ast.Num(rand_number_text(rng))


def rand_cond_atom(rng: random.Random) -> ast.CondExpr:
    if rng.random() < 0.6:
        op = rng.choice(list(ast.CmpOp))
        return ast.Cmp(rand_ident(rng), op, rand_scalar(rng))
    values = tuple(rand_scalar(rng) for _ in range(rng.randrange(1, 4)))
    return ast.Member(rand_ident(rng), rng.random() < 0.5, values)


def rand_condition(rng: random.Random) -> ast.CondExpr:
    # Fold atoms exactly the way the grammar does (and over or, both
    # left-associative), so the tree is representable without parentheses.
    atoms = [rand_cond_atom(rng) for _ in range(rng.randrange(1, 5))]
    or_operands = []
    current = atoms[0]
    for atom in atoms[1:]:
        if rng.random() < 0.5:
            current = ast.Bool(ast.BoolKind.AND, current, atom)
        else:
            or_operands.append(current)
            current = atom
    or_operands.append(current)
    result = or_operands[0]
    for operand in or_operands[1:]:
        result = ast.Bool(ast.BoolKind.OR, result, operand)
    return result


def rand_ident_tuple(rng: random.Random, lo=1, hi=3) -> tuple[str, ...]:
    return tuple(rand_ident(rng) for _ in range(rng.randrange(lo, hi + 1)))


def rand_df_op(rng: random.Random) -> ast.ChainOp:
    builders = [
        lambda: ast.SelectCols(rand_ident_tuple(rng)),
        lambda: ast.SelectRows(rand_condition(rng)),
        lambda: ast.DropCols(rand_ident_tuple(rng)),
        lambda: ast.DropRows(rand_condition(rng)),
        lambda: ast.GroupBy(rand_ident_tuple(rng), rng.choice(list(ast.AggFn))),
        lambda: ast.OnMissingFill(rand_scalar(rng)),
        lambda: ast.OnMissingDropRows(),
        lambda: ast.Replace(rand_scalar(rng), rand_scalar(rng)),
        lambda: ast.ApplyFun(rand_ident(rng), rng.choice(list(ast.ColsOrRows))),
        lambda: ast.AppendCol(rand_ident(rng)),
        lambda: ast.AppendRow(rand_ident(rng), rand_scalar(rng)),
        lambda: ast.SortBy(rand_ident(rng)),
        lambda: ast.DropDuplicates(),
        lambda: _rand_rename(rng),
        lambda: ast.Save(rng.choice(list(ast.FileFormat)), rand_path(rng)),
        lambda: ast.ReturnTopN(rng.randrange(1, 100)),
    ]
    return rng.choice(builders)()


def _rand_rename(rng: random.Random) -> ast.RenameCols:
    sources: list[str] = []
    while len(sources) < rng.randrange(1, 4):
        name = rand_ident(rng)
        if name not in sources:
            sources.append(name)
    return ast.RenameCols(tuple((src, rand_ident(rng)) for src in sources))


def rand_path(rng: random.Random) -> ast.Literal:
    if rng.random() < 0.5:
        return ast.Ident(rand_ident(rng))
    return ast.Str("data/" + rand_ident(rng) + ".csv")


def rand_terminal(rng: random.Random) -> ast.ChainOp:
    return rng.choice([ast.Show(), ast.Describe(), ast.Count()])


def rand_line(rng: random.Random) -> ast.DslLine:
    """One random statement satisfying every structural invariant."""
    shape = rng.randrange(6)
    if shape == 0:
        return ast.DslLine(None, None, (ast.TargetOption(rng.choice(list(ast.Target))),))
    if shape == 1:
        op = rng.choice([
            ast.StartSession("".join(rng.choice(_STR_ALPHABET)
                                     for _ in range(rng.randrange(0, 10)))),
            ast.StopSession(),
        ])
        return ast.DslLine(None, None, (op,))
    assignment = ast.AssignTarget(rand_ident(rng)) if rng.random() < 0.6 else None
    if shape == 2:
        fields = tuple((name, rng.choice(list(ast.DslType)))
                       for name in rand_ident_tuple(rng))
        return ast.DslLine(assignment, None, (ast.SchemaDef(fields),))
    if shape == 3:
        fmt = rng.choice([None, ast.FileFormat.CSV, ast.FileFormat.JSON])
        schema = rand_ident(rng) if rng.random() < 0.4 else None
        chain: list[ast.ChainOp] = [ast.Load(fmt, rand_path(rng), schema)]
        for _ in range(rng.randrange(0, 2)):
            chain.append(rand_df_op(rng))
        if rng.random() < 0.3:
            chain.append(rand_terminal(rng))
        return ast.DslLine(assignment, None, tuple(chain))
    chain = [rand_df_op(rng) for _ in range(rng.randrange(1, 4))]
    if rng.random() < 0.4:
        chain.append(rand_terminal(rng))
    return ast.DslLine(assignment, ast.DataframeRef(rand_ident(rng)), tuple(chain))
