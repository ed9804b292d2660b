"""Target-code generation: walk a DslLine and emit one host-language statement.

A framework-agnostic :class:`CodeGenerator` handles everything the targets
share (assignment prefix, source dataframe, chain order, warning plumbing);
:class:`PandasGenerator` and :class:`SparkGenerator` are small subclasses
with one short method per operation.  Adding a target means adding one such
subclass.

Generation is total: every valid line produces a :class:`GenResult` for both
targets.  Operations with no rendering under the selected target (schema
machinery under Pandas, ``append_row``/``apply_fun`` under Spark) make the
whole line emit empty code plus a warning naming the skipped operation.
Output strings are the contract; tests pin them byte-for-byte.
"""

from __future__ import annotations

from dataclasses import dataclass

from tabledsl.ast import (
    AppendCol,
    AppendRow,
    ApplyFun,
    Bool,
    BoolKind,
    ChainOp,
    Cmp,
    ColsOrRows,
    CondExpr,
    Count,
    Describe,
    DropCols,
    DropDuplicates,
    DropRows,
    DslLine,
    DslType,
    GroupBy,
    AggFn,
    Load,
    Member,
    OnMissingDropRows,
    OnMissingFill,
    RenameCols,
    Replace,
    ReturnTopN,
    Save,
    SchemaDef,
    SelectCols,
    SelectRows,
    Show,
    SortBy,
    StartSession,
    StopSession,
    Target,
    TargetOption,
    IDENT_RE,
    pretty_literal,
)


@dataclass(frozen=True)
class GenContext:
    """Settings the backends render against."""
    target: Target
    session_var: str = "spark"
    module_alias_pandas: str = "pd"

    def __post_init__(self):
        for name in (self.session_var, self.module_alias_pandas):
            if not IDENT_RE.match(name):
                raise ValueError(f"{name!r} is not a valid identifier")


@dataclass(frozen=True)
class GenWarning:
    op: str
    message: str


@dataclass(frozen=True)
class GenResult:
    """Generated code text plus warnings; empty code always carries one."""
    code: str
    warnings: tuple[GenWarning, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "warnings", tuple(self.warnings))
        if not self.code and not self.warnings:
            raise ValueError("empty emission must carry a warning")


class UnsupportedOp(Exception):
    """An operation with no rendering rule in either target (walker bug)."""

    def __init__(self, op: ChainOp, target: Target):
        super().__init__(f"no rendering for {type(op).__name__} under {target.value}")
        self.op = op
        self.target = target


class _SkipLine(Exception):
    """Internal: the line has no emission under this target."""

    def __init__(self, op: str, message: str):
        super().__init__(message)
        self.warning = GenWarning(op, message)


def _quote(name: str) -> str:
    return f"'{name}'"


def _value(lit) -> str:
    # Idents stay bare (host-language variables), strings get single quotes.
    return pretty_literal(lit)


# ---------------------------------------------------------------------------
# Condition rendering (identical for both targets, per the filter examples)

def _cond_text(cond: CondExpr, df: str, parenthesize: bool) -> str:
    if isinstance(cond, Cmp):
        return f"({df}.{cond.col} {cond.op.value} {_value(cond.rhs)})"
    if isinstance(cond, Member):
        values = ", ".join(_value(v) for v in cond.values)
        base = f"{df}.{cond.col}.isin([{values}])"
        return f"(~{base})" if cond.negated else f"({base})"
    if isinstance(cond, Bool):
        glue = " & " if cond.kind is BoolKind.AND else " | "
        inner = _cond_text(cond.lhs, df, True) + glue + _cond_text(cond.rhs, df, True)
        return f"({inner})" if parenthesize else inner
    raise TypeError(f"unknown condition {cond!r}")


def render_condition(cond: CondExpr, df: str, ctx: GenContext) -> str:
    """Render a condition over dataframe ``df``, every node parenthesized."""
    return _cond_text(cond, df, parenthesize=True)


_SPARK_TYPES = {
    DslType.INT: "IntegerType()",
    DslType.STR: "StringType()",
    DslType.FLOAT: "FloatType()",
    DslType.BOOL: "BooleanType()",
}


def render_schema(fields, ctx: GenContext) -> str:
    """Render a schema definition as a Spark StructType construction."""
    if ctx.target is not Target.SPARK:
        raise ValueError("schema definitions render under the Spark target only")
    parts = ", ".join(
        f"StructField({_quote(name)}, {_SPARK_TYPES[typ]}, True)" for name, typ in fields
    )
    return f"StructType([{parts}])"


# ---------------------------------------------------------------------------
# Walker and backends

class CodeGenerator:
    """Framework-agnostic walker over a DslLine.

    Subclasses implement one method per operation with signature
    ``(op, expr, frame)`` where ``expr`` is the expression text built so far
    and ``frame`` is the name of the source dataframe (None for chains that
    open with ``load``).  Each method returns the extended expression text or
    raises :class:`_SkipLine`.
    """

    target: Target

    _METHODS = {
        Load: "load", Save: "save",
        SelectCols: "select_cols", SelectRows: "select_rows",
        DropCols: "drop_cols", DropRows: "drop_rows",
        GroupBy: "group_by",
        OnMissingFill: "on_missing_fill", OnMissingDropRows: "on_missing_drop_rows",
        Replace: "replace", ApplyFun: "apply_fun",
        AppendCol: "append_col", AppendRow: "append_row",
        SortBy: "sort_by", DropDuplicates: "drop_duplicates",
        RenameCols: "rename_cols",
        Show: "show", Describe: "describe",
        ReturnTopN: "return_top_n", Count: "count",
    }

    def __init__(self, ctx: GenContext):
        self.ctx = ctx

    def generate(self, line: DslLine) -> GenResult:
        try:
            return GenResult(self._statement(line))
        except _SkipLine as skip:
            return GenResult("", (skip.warning,))

    def _statement(self, line: DslLine) -> str:
        first = line.chain[0]
        if isinstance(first, TargetOption):
            raise _SkipLine("target_code",
                            "generation-target directive; consumed by the driver")
        if isinstance(first, StartSession):
            return self.start_session(first)
        if isinstance(first, StopSession):
            return self.stop_session(first)
        prefix = f"{line.assignment.name} = " if line.assignment else ""
        if isinstance(first, SchemaDef):
            return prefix + self.schema_def(first)
        frame = line.source.name if line.source is not None else None
        expr = frame
        for op in line.chain:
            method = self._METHODS.get(type(op))
            if method is None:
                raise UnsupportedOp(op, self.target)
            expr = getattr(self, method)(op, expr, frame)
        return prefix + expr

    def _need_frame(self, op_kw: str, frame: str | None) -> str:
        if frame is None:
            raise _SkipLine(op_kw, f"{op_kw} needs a named source dataframe ('on df')")
        return frame

    def start_session(self, op: StartSession) -> str:
        raise NotImplementedError

    def stop_session(self, op: StopSession) -> str:
        raise NotImplementedError

    def schema_def(self, op: SchemaDef) -> str:
        raise NotImplementedError


class PandasGenerator(CodeGenerator):
    target = Target.PANDAS

    def load(self, op, expr, frame):
        if op.schema is not None:
            raise _SkipLine("load", "with_schema loads are Spark-only; no Pandas code emitted")
        if op.format is None:
            raise _SkipLine("load", "load without an explicit format is Spark-only")
        return f"{self.ctx.module_alias_pandas}.read_{op.format.value}({_value(op.path)})"

    def save(self, op, expr, frame):
        return f"{expr}.to_{op.format.value}({_value(op.path)})"

    def select_cols(self, op, expr, frame):
        cols = ", ".join(_quote(c) for c in op.cols)
        return f"{expr}[[{cols}]]"

    def select_rows(self, op, expr, frame):
        frame = self._need_frame("select_rows", frame)
        return f"{expr}[{_cond_text(op.cond, frame, False)}]"

    def drop_cols(self, op, expr, frame):
        cols = ", ".join(_quote(c) for c in op.cols)
        return f"{expr}.drop(columns=[{cols}])"

    def drop_rows(self, op, expr, frame):
        frame = self._need_frame("drop_rows", frame)
        return f"{expr}[~({_cond_text(op.cond, frame, False)})]"

    def group_by(self, op, expr, frame):
        cols = ", ".join(_quote(c) for c in op.cols)
        grouped = f"{expr}.groupby([{cols}])"
        if op.agg is AggFn.UNIQUE:
            return f"{grouped}.agg(['unique'])"
        return f"{grouped}.{op.agg.value}()"

    def on_missing_fill(self, op, expr, frame):
        return f"{expr}.fillna({_value(op.value)})"

    def on_missing_drop_rows(self, op, expr, frame):
        return f"{expr}.dropna()"

    def replace(self, op, expr, frame):
        return f"{expr}.replace({_value(op.old)}, {_value(op.new)})"

    def apply_fun(self, op, expr, frame):
        axis = 0 if op.axis is ColsOrRows.COLS else 1
        return f"{expr}.apply({op.fn}, axis={axis})"

    def append_col(self, op, expr, frame):
        return f"{expr}.assign({op.name}=None)"

    def append_row(self, op, expr, frame):
        return f"{expr}.append({{{_quote(op.name)}: {_value(op.default)}}}, ignore_index=True)"

    def sort_by(self, op, expr, frame):
        return f"{expr}.sort_values({_quote(op.col)})"

    def drop_duplicates(self, op, expr, frame):
        return f"{expr}.drop_duplicates()"

    def rename_cols(self, op, expr, frame):
        mapping = ", ".join(f"{_quote(old)}: {_quote(new)}" for old, new in op.pairs)
        return f"{expr}.rename(columns={{{mapping}}})"

    def show(self, op, expr, frame):
        return f"print({expr})"

    def describe(self, op, expr, frame):
        return f"{expr}.describe()"

    def return_top_n(self, op, expr, frame):
        return f"{expr}.head({op.n})"

    def count(self, op, expr, frame):
        return f"{expr}.count()"

    def start_session(self, op):
        raise _SkipLine("start_session", "start_session is Spark-only; no Pandas code emitted")

    def stop_session(self, op):
        raise _SkipLine("stop_session", "stop_session is Spark-only; no Pandas code emitted")

    def schema_def(self, op):
        raise _SkipLine("schema", "schema definitions are Spark-only; no Pandas code emitted")


class SparkGenerator(CodeGenerator):
    target = Target.SPARK

    def load(self, op, expr, frame):
        reader = f"{self.ctx.session_var}.read"
        call = f"{reader}.{op.format.value}" if op.format is not None else f"{reader}.load"
        args = _value(op.path)
        if op.schema is not None:
            args += f", schema={op.schema}"
        return f"{call}({args})"

    def save(self, op, expr, frame):
        return f"{expr}.write.{op.format.value}({_value(op.path)})"

    def select_cols(self, op, expr, frame):
        cols = ", ".join(_quote(c) for c in op.cols)
        return f"{expr}.select({cols})"

    def select_rows(self, op, expr, frame):
        frame = self._need_frame("select_rows", frame)
        return f"{expr}.filter({_cond_text(op.cond, frame, False)})"

    def drop_cols(self, op, expr, frame):
        cols = ", ".join(_quote(c) for c in op.cols)
        return f"{expr}.drop({cols})"

    def drop_rows(self, op, expr, frame):
        frame = self._need_frame("drop_rows", frame)
        return f"{expr}.filter(~({_cond_text(op.cond, frame, False)}))"

    def group_by(self, op, expr, frame):
        cols = ", ".join(_quote(c) for c in op.cols)
        grouped = f"{expr}.groupBy({cols})"
        if op.agg is AggFn.UNIQUE:
            return f"{grouped}.agg(collect_set('*'))"
        return f"{grouped}.{op.agg.value}()"

    def on_missing_fill(self, op, expr, frame):
        return f"{expr}.na.fill({_value(op.value)})"

    def on_missing_drop_rows(self, op, expr, frame):
        return f"{expr}.na.drop()"

    def replace(self, op, expr, frame):
        return f"{expr}.replace({_value(op.old)}, {_value(op.new)})"

    def apply_fun(self, op, expr, frame):
        raise _SkipLine("apply_fun", "apply_fun requires a UDF under Spark; write it directly")

    def append_col(self, op, expr, frame):
        return f"{expr}.withColumn({_quote(op.name)}, lit(None))"

    def append_row(self, op, expr, frame):
        raise _SkipLine("append_row", "append_row is Pandas-only; no Spark code emitted")

    def sort_by(self, op, expr, frame):
        return f"{expr}.sort({_quote(op.col)})"

    def drop_duplicates(self, op, expr, frame):
        return f"{expr}.dropDuplicates()"

    def rename_cols(self, op, expr, frame):
        calls = "".join(
            f".withColumnRenamed({_quote(old)}, {_quote(new)})" for old, new in op.pairs
        )
        return f"{expr}{calls}"

    def show(self, op, expr, frame):
        return f"{expr}.show()"

    def describe(self, op, expr, frame):
        # Spark's describe returns a frame; chain .show() so both targets print.
        return f"{expr}.describe().show()"

    def return_top_n(self, op, expr, frame):
        return f"{expr}.head({op.n})"

    def count(self, op, expr, frame):
        return f"{expr}.count()"

    def start_session(self, op):
        name = op.name.replace("\\", "\\\\").replace("'", "\\'")
        return f"{self.ctx.session_var} = SparkSession.builder.appName('{name}').getOrCreate()"

    def stop_session(self, op):
        return f"{self.ctx.session_var}.stop()"

    def schema_def(self, op):
        return render_schema(op.fields, self.ctx)


_BACKENDS = {Target.PANDAS: PandasGenerator, Target.SPARK: SparkGenerator}


def generate(line: DslLine, ctx: GenContext) -> GenResult:
    """Generate target code for one statement under ``ctx.target``."""
    return _BACKENDS[ctx.target](ctx).generate(line)
