"""AST node definitions for the dataframe DSL.

One DSL statement becomes one :class:`DslLine`: an optional assignment
target, an optional source dataframe (``on df``), and a non-empty chain of
operations separated by the ``:`` pipeline operator.  All nodes are frozen
dataclasses, so trees are immutable values that compare structurally and can
be shared freely between threads.

Structural rules enforced at construction time (beyond the obvious field
shapes):

* ``target_code``, ``start_session`` and ``stop_session`` statements stand
  alone: single-op chain, no assignment, no source.
* ``schema`` statements stand alone and take no source (assignment allowed).
* ``load`` opens a chain and never takes a source; every other operation
  requires one.
* ``show``, ``describe`` and ``count`` are terminal: at most one per chain,
  and only in last position.
* Condition trees contain only shapes the grammar can express: the grammar
  has no parentheses, so ``and`` nodes never hold ``or`` children and
  same-operator chains lean left.

These rules make the set of valid trees coincide exactly with the set of
parseable statements, which is what the parse/pretty-print round trip
relies on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
NUMBER_RE = re.compile(r"[+-]?[0-9]+(?:\.[0-9]+)?\Z")


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ValueError(msg)


def _ident(name: str, what: str) -> None:
    _require(isinstance(name, str) and bool(IDENT_RE.match(name)),
             f"{what} must be a valid identifier, got {name!r}")


# ---------------------------------------------------------------------------
# Closed enumerations

class Target(Enum):
    PANDAS = "pandas"
    SPARK = "spark"


class AggFn(Enum):
    SUM = "sum"
    MIN = "min"
    MAX = "max"
    MEAN = "mean"
    COUNT = "count"
    UNIQUE = "unique"


class FileFormat(Enum):
    CSV = "csv"
    JSON = "json"


class DslType(Enum):
    INT = "int"
    STR = "str"
    FLOAT = "float"
    BOOL = "bool"


class ColsOrRows(Enum):
    COLS = "cols"
    ROWS = "rows"


class CmpOp(Enum):
    EQ = "=="
    NE = "!="
    LT = "<"
    LE = "<="
    GT = ">"
    GE = ">="


class BoolKind(Enum):
    AND = "and"
    OR = "or"


# ---------------------------------------------------------------------------
# Literals

@dataclass(frozen=True)
class Literal:
    """Base class for literal values appearing in operation arguments."""


@dataclass(frozen=True)
class Ident(Literal):
    """A bare word in value position; emitted verbatim so it can reference a
    host-language variable (``col1 == m`` keeps ``m`` unquoted)."""
    text: str

    def __post_init__(self):
        _ident(self.text, "Ident literal")


@dataclass(frozen=True)
class Str(Literal):
    """A single-quoted string; ``text`` holds the content without quotes."""
    text: str


@dataclass(frozen=True)
class Num(Literal):
    """A decimal number, kept as source text so printing is loss-free."""
    text: str

    def __post_init__(self):
        _require(bool(NUMBER_RE.match(self.text)),
                 f"Num literal must be decimal text, got {self.text!r}")


@dataclass(frozen=True)
class ListLit(Literal):
    """A bracketed list of scalar literals, e.g. ``[v1, v2, v3]``."""
    items: tuple[Literal, ...]

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        for item in self.items:
            _require(is_scalar(item), "list literals hold scalars only")


def is_scalar(lit: Literal) -> bool:
    return isinstance(lit, (Ident, Str, Num))


def _scalar(lit: Literal, what: str) -> None:
    _require(isinstance(lit, Literal) and is_scalar(lit),
             f"{what} must be a scalar literal (identifier, string or number)")


# ---------------------------------------------------------------------------
# Conditions

@dataclass(frozen=True)
class CondExpr:
    """Base class for boolean conditions over dataframe columns."""


@dataclass(frozen=True)
class Cmp(CondExpr):
    """``col OP value`` comparison leaf."""
    col: str
    op: CmpOp
    rhs: Literal

    def __post_init__(self):
        _ident(self.col, "comparison column")
        _require(isinstance(self.op, CmpOp), "op must be a CmpOp")
        _scalar(self.rhs, "comparison right-hand side")


@dataclass(frozen=True)
class Member(CondExpr):
    """``col in [..]`` / ``col not in [..]`` membership leaf."""
    col: str
    negated: bool
    values: tuple[Literal, ...]

    def __post_init__(self):
        _ident(self.col, "membership column")
        object.__setattr__(self, "values", tuple(self.values))
        _require(len(self.values) >= 1, "membership list must be non-empty")
        for v in self.values:
            _scalar(v, "membership value")


@dataclass(frozen=True)
class Bool(CondExpr):
    """``and`` / ``or`` combination node.

    ``and`` binds tighter than ``or`` and both associate left; since the
    grammar has no parentheses, the only representable shapes are: an ``and``
    node never holds a Bool right child or an ``or`` left child, and an
    ``or`` node never holds an ``or`` right child.
    """
    kind: BoolKind
    lhs: CondExpr
    rhs: CondExpr

    def __post_init__(self):
        _require(isinstance(self.kind, BoolKind), "kind must be a BoolKind")
        _require(isinstance(self.lhs, CondExpr) and isinstance(self.rhs, CondExpr),
                 "Bool children must be conditions")
        if self.kind is BoolKind.AND:
            _require(not isinstance(self.rhs, Bool),
                     "'and' right child must be a leaf (left associativity)")
            _require(not (isinstance(self.lhs, Bool) and self.lhs.kind is BoolKind.OR),
                     "'and' cannot hold an 'or' child (no parentheses in the grammar)")
        else:
            _require(not (isinstance(self.rhs, Bool) and self.rhs.kind is BoolKind.OR),
                     "'or' right child must not be 'or' (left associativity)")


# ---------------------------------------------------------------------------
# Chain operations

@dataclass(frozen=True)
class ChainOp:
    """Base class for one step of a ``:``-separated operation chain."""


@dataclass(frozen=True)
class Load(ChainOp):
    """``load [as csv|json] <path> [with_schema s]``; no source dataframe."""
    format: FileFormat | None
    path: Literal
    schema: str | None = None

    def __post_init__(self):
        _require(self.format is None or isinstance(self.format, FileFormat),
                 "load format must be a FileFormat or None")
        _require(isinstance(self.path, (Ident, Str)),
                 "load path must be a string literal or an identifier")
        if self.schema is not None:
            _ident(self.schema, "load schema reference")


@dataclass(frozen=True)
class Save(ChainOp):
    """``save as csv|json to <path>``."""
    format: FileFormat
    path: Literal

    def __post_init__(self):
        _require(isinstance(self.format, FileFormat), "save format must be a FileFormat")
        _require(isinstance(self.path, (Ident, Str)),
                 "save path must be a string literal or an identifier")


def _ident_tuple(values, what: str) -> tuple[str, ...]:
    values = tuple(values)
    _require(len(values) >= 1, f"{what} list must be non-empty")
    for v in values:
        _ident(v, what)
    return values


@dataclass(frozen=True)
class SelectCols(ChainOp):
    cols: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "cols", _ident_tuple(self.cols, "select_cols column"))


@dataclass(frozen=True)
class SelectRows(ChainOp):
    cond: CondExpr

    def __post_init__(self):
        _require(isinstance(self.cond, CondExpr), "select_rows needs a condition")


@dataclass(frozen=True)
class DropCols(ChainOp):
    cols: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "cols", _ident_tuple(self.cols, "drop_cols column"))


@dataclass(frozen=True)
class DropRows(ChainOp):
    cond: CondExpr

    def __post_init__(self):
        _require(isinstance(self.cond, CondExpr), "drop_rows needs a condition")


@dataclass(frozen=True)
class GroupBy(ChainOp):
    cols: tuple[str, ...]
    agg: AggFn

    def __post_init__(self):
        object.__setattr__(self, "cols", _ident_tuple(self.cols, "group_by column"))
        _require(isinstance(self.agg, AggFn), "group_by aggregation must be an AggFn")


@dataclass(frozen=True)
class OnMissingFill(ChainOp):
    value: Literal

    def __post_init__(self):
        _scalar(self.value, "on_missing fill value")


@dataclass(frozen=True)
class OnMissingDropRows(ChainOp):
    pass


@dataclass(frozen=True)
class Replace(ChainOp):
    old: Literal
    new: Literal

    def __post_init__(self):
        _scalar(self.old, "replace old value")
        _scalar(self.new, "replace new value")


@dataclass(frozen=True)
class ApplyFun(ChainOp):
    fn: str
    axis: ColsOrRows

    def __post_init__(self):
        _ident(self.fn, "apply_fun function name")
        _require(isinstance(self.axis, ColsOrRows), "apply_fun axis must be cols or rows")


@dataclass(frozen=True)
class AppendCol(ChainOp):
    name: str

    def __post_init__(self):
        _ident(self.name, "append_col name")


@dataclass(frozen=True)
class AppendRow(ChainOp):
    name: str
    default: Literal

    def __post_init__(self):
        _ident(self.name, "append_row column name")
        _scalar(self.default, "append_row default value")


@dataclass(frozen=True)
class SortBy(ChainOp):
    col: str

    def __post_init__(self):
        _ident(self.col, "sort_by column")


@dataclass(frozen=True)
class DropDuplicates(ChainOp):
    pass


@dataclass(frozen=True)
class RenameCols(ChainOp):
    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self):
        pairs = tuple((old, new) for old, new in self.pairs)
        object.__setattr__(self, "pairs", pairs)
        _require(len(pairs) >= 1, "rename_cols pair list must be non-empty")
        seen = set()
        for old, new in pairs:
            _ident(old, "rename_cols source column")
            _ident(new, "rename_cols target column")
            _require(old not in seen, f"duplicate rename source {old!r}")
            seen.add(old)


@dataclass(frozen=True)
class Show(ChainOp):
    pass


@dataclass(frozen=True)
class Describe(ChainOp):
    pass


@dataclass(frozen=True)
class ReturnTopN(ChainOp):
    n: int

    def __post_init__(self):
        _require(isinstance(self.n, int) and self.n >= 1,
                 "return_top_N needs a positive integer")


@dataclass(frozen=True)
class Count(ChainOp):
    pass


@dataclass(frozen=True)
class StartSession(ChainOp):
    """``start_session named '<name>'``; name is the display string."""
    name: str


@dataclass(frozen=True)
class StopSession(ChainOp):
    pass


@dataclass(frozen=True)
class SchemaDef(ChainOp):
    """``schema col1 of int, col2 of str``."""
    fields: tuple[tuple[str, DslType], ...]

    def __post_init__(self):
        fields = tuple((name, typ) for name, typ in self.fields)
        object.__setattr__(self, "fields", fields)
        _require(len(fields) >= 1, "schema field list must be non-empty")
        for name, typ in fields:
            _ident(name, "schema field name")
            _require(isinstance(typ, DslType), "schema field type must be a DslType")


@dataclass(frozen=True)
class TargetOption(ChainOp):
    """``target_code = spark|pandas`` generation-target directive."""
    target: Target

    def __post_init__(self):
        _require(isinstance(self.target, Target), "target must be a Target")


# Operations that may only open a chain (and take no `on df` source).
HEAD_ONLY_OPS = (Load, StartSession, StopSession, SchemaDef, TargetOption)
# Inspection operations that end a chain.
TERMINAL_OPS = (Show, Describe, Count)
# Statements that stand alone: single op, no source; no assignment except SchemaDef.
_SOLE_OPS = (StartSession, StopSession, SchemaDef, TargetOption)


def is_dataframe_op(op: ChainOp) -> bool:
    """True for operations that transform or inspect an existing dataframe."""
    return not isinstance(op, HEAD_ONLY_OPS)


# ---------------------------------------------------------------------------
# Statement

@dataclass(frozen=True)
class AssignTarget:
    """Left-hand side of ``x = ...``."""
    name: str

    def __post_init__(self):
        _ident(self.name, "assignment target")


@dataclass(frozen=True)
class DataframeRef:
    """The dataframe named by ``on <df>``."""
    name: str

    def __post_init__(self):
        _ident(self.name, "dataframe reference")


@dataclass(frozen=True)
class DslLine:
    """One parsed DSL statement."""
    assignment: AssignTarget | None
    source: DataframeRef | None
    chain: tuple[ChainOp, ...]

    def __post_init__(self):
        object.__setattr__(self, "chain", tuple(self.chain))
        _require(len(self.chain) >= 1, "chain must be non-empty")
        first = self.chain[0]
        if isinstance(first, _SOLE_OPS):
            _require(len(self.chain) == 1,
                     f"{type(first).__name__} must be the sole chain operation")
            _require(self.source is None,
                     f"{type(first).__name__} takes no source dataframe")
            if not isinstance(first, SchemaDef):
                _require(self.assignment is None,
                         f"{type(first).__name__} takes no assignment")
        elif isinstance(first, Load):
            _require(self.source is None, "load takes no source dataframe")
        else:
            _require(self.source is not None,
                     f"{type(first).__name__} needs a source dataframe ('on df')")
        for op in self.chain[1:]:
            _require(is_dataframe_op(op),
                     f"{type(op).__name__} may only open a chain")
        for i, op in enumerate(self.chain):
            if isinstance(op, TERMINAL_OPS):
                _require(i == len(self.chain) - 1,
                         f"{type(op).__name__} must be the last chain operation")


def structural_eq(a: DslLine, b: DslLine) -> bool:
    """True iff the two trees match variant-by-variant and field-by-field."""
    return a == b


# ---------------------------------------------------------------------------
# Canonical pretty-printer

def pretty_literal(lit: Literal) -> str:
    if isinstance(lit, Ident):
        return lit.text
    if isinstance(lit, Num):
        return lit.text
    if isinstance(lit, Str):
        escaped = lit.text.replace("\\", "\\\\").replace("'", "\\'")
        return f"'{escaped}'"
    if isinstance(lit, ListLit):
        return "[" + ", ".join(pretty_literal(v) for v in lit.items) + "]"
    raise TypeError(f"unknown literal {lit!r}")


def pretty_condition(cond: CondExpr) -> str:
    if isinstance(cond, Cmp):
        return f"{cond.col} {cond.op.value} {pretty_literal(cond.rhs)}"
    if isinstance(cond, Member):
        op = "not in" if cond.negated else "in"
        values = ", ".join(pretty_literal(v) for v in cond.values)
        return f"{cond.col} {op} [{values}]"
    if isinstance(cond, Bool):
        return f"{pretty_condition(cond.lhs)} {cond.kind.value} {pretty_condition(cond.rhs)}"
    raise TypeError(f"unknown condition {cond!r}")


def pretty_op(op: ChainOp) -> str:
    if isinstance(op, Load):
        parts = ["load"]
        if op.format is not None:
            parts.append(f"as {op.format.value}")
        parts.append(pretty_literal(op.path))
        if op.schema is not None:
            parts.append(f"with_schema {op.schema}")
        return " ".join(parts)
    if isinstance(op, Save):
        return f"save as {op.format.value} to {pretty_literal(op.path)}"
    if isinstance(op, SelectCols):
        return "select_cols " + ", ".join(op.cols)
    if isinstance(op, SelectRows):
        return "select_rows " + pretty_condition(op.cond)
    if isinstance(op, DropCols):
        return "drop_cols " + ", ".join(op.cols)
    if isinstance(op, DropRows):
        return "drop_rows " + pretty_condition(op.cond)
    if isinstance(op, GroupBy):
        return "group_by " + ", ".join(op.cols) + f" apply {op.agg.value}"
    if isinstance(op, OnMissingFill):
        return f"on_missing fill_with {pretty_literal(op.value)}"
    if isinstance(op, OnMissingDropRows):
        return "on_missing drop_rows"
    if isinstance(op, Replace):
        return f"replace {pretty_literal(op.old)} by {pretty_literal(op.new)}"
    if isinstance(op, ApplyFun):
        return f"apply_fun {op.fn} on {op.axis.value}"
    if isinstance(op, AppendCol):
        return f"append_col {op.name}"
    if isinstance(op, AppendRow):
        return f"append_row {op.name} default {pretty_literal(op.default)}"
    if isinstance(op, SortBy):
        return f"sort_by {op.col}"
    if isinstance(op, DropDuplicates):
        return "drop_duplicates"
    if isinstance(op, RenameCols):
        return "rename_cols " + ", ".join(f"{old} to {new}" for old, new in op.pairs)
    if isinstance(op, Show):
        return "show"
    if isinstance(op, Describe):
        return "describe"
    if isinstance(op, ReturnTopN):
        return f"return_top_N {op.n}"
    if isinstance(op, Count):
        return "count"
    if isinstance(op, StartSession):
        escaped = op.name.replace("\\", "\\\\").replace("'", "\\'")
        return f"start_session named '{escaped}'"
    if isinstance(op, StopSession):
        return "stop_session"
    if isinstance(op, SchemaDef):
        fields = ", ".join(f"{name} of {typ.value}" for name, typ in op.fields)
        return f"schema {fields}"
    if isinstance(op, TargetOption):
        return f"target_code = {op.target.value}"
    raise TypeError(f"unknown chain operation {op!r}")


def pretty_print(line: DslLine) -> str:
    """Render a DslLine as canonical DSL text.

    Canonical means single spaces, lowercase keywords and ``:`` separators;
    parsing the result yields a structurally equal tree.
    """
    segments = []
    if line.source is not None:
        segments.append(f"on {line.source.name}")
    segments.extend(pretty_op(op) for op in line.chain)
    text = " : ".join(segments)
    if line.assignment is not None:
        text = f"{line.assignment.name} = {text}"
    return text
