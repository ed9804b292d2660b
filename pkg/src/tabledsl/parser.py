"""Tokenizer and recursive-descent parser for one DSL line.

The parser does double duty: it builds the AST, and it records, for every
input position it examines, the set of tokens that would have been legal
there.  That recorded set is returned in :class:`ParseError.expected` on
failure and in :class:`ParseAnalysis.expected_after` for the end of the
payload, and is the raw material the completion engine works from.

Errors are returned, not raised: ``parse_line`` yields either a
:class:`~tabledsl.ast.DslLine` or a :class:`ParseError`.  An incomplete
statement is just a parse error whose position is the end of the input.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from tabledsl.ast import (
    AggFn,
    AppendCol,
    AppendRow,
    ApplyFun,
    AssignTarget,
    Bool,
    BoolKind,
    ChainOp,
    Cmp,
    CmpOp,
    ColsOrRows,
    CondExpr,
    Count,
    DataframeRef,
    Describe,
    DropCols,
    DropDuplicates,
    DropRows,
    DslLine,
    DslType,
    FileFormat,
    GroupBy,
    Ident,
    Literal,
    Load,
    Member,
    Num,
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
    Str,
    Target,
    TargetOption,
    TERMINAL_OPS,
)

KEYWORDS = frozenset({
    "load", "as", "csv", "json", "save", "to", "on",
    "select_cols", "select_rows", "drop_cols", "drop_rows",
    "and", "or", "in", "not",
    "group_by", "apply", "sum", "min", "max", "mean", "count", "unique",
    "on_missing", "fill_with", "replace", "by",
    "apply_fun", "cols", "rows",
    "append_col", "append_row", "default",
    "sort_by", "drop_duplicates", "rename_cols",
    "show", "describe", "return_top_N",
    "start_session", "named", "stop_session",
    "schema", "of", "int", "str", "float", "bool", "with_schema",
    "target_code", "spark", "pandas",
})

# Operations legal after `on <df> :` (and between `:` separators).
DF_OP_KEYWORDS = (
    "select_cols", "select_rows", "drop_cols", "drop_rows", "group_by",
    "on_missing", "replace", "apply_fun", "append_col", "append_row",
    "sort_by", "drop_duplicates", "rename_cols", "show", "describe",
    "return_top_N", "count", "save",
)

CMP_OPS = ("==", "!=", "<=", ">=", "<", ">")
# Longest first so `==` wins over `=` and `<=` over `<`.
_PUNCTS = ("==", "!=", "<=", ">=", "<", ">", "=", ":", ",", "[", "]")

# Expected-set descriptions for non-keyword tokens.
DESC_IDENT = "identifier"
DESC_STRING = "string literal"
DESC_NUMBER = "number"
DESC_CMP = "comparison operator"
DESC_EOL = "end of line"

_WORD_START = frozenset("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_WORD_BODY = _WORD_START | frozenset("0123456789")
_DIGITS = frozenset("0123456789")


@dataclass(frozen=True)
class Token:
    """One lexeme; ``span`` is the (start, end) column range in the payload."""
    kind: str  # keyword | ident | string | number | punct | eol
    text: str
    span: tuple[int, int]


@dataclass(frozen=True)
class ParseError:
    """A structured parse failure.

    ``expected`` holds token descriptions: keywords verbatim, plus
    "identifier", "string literal", "number", "comparison operator",
    "end of line" and quoted punctuation like "','".
    """
    position: int
    found: str
    expected: frozenset[str]

    def __str__(self) -> str:
        found = repr(self.found) if self.found else "end of line"
        return (f"col {self.position}: found {found}, "
                f"expected {{{', '.join(sorted(self.expected))}}}")


@dataclass(frozen=True)
class DslDetection:
    is_dsl: bool
    payload_offset: int


@dataclass(frozen=True)
class ParseAnalysis:
    """Outcome of parsing plus the legal continuations at end of payload.

    ``expected_after`` is non-empty when the payload is a complete statement
    (possible extensions, including "end of line") or a prefix of one (the
    error's expected set); it is empty when the payload is broken before its
    end, i.e. no continuation could repair it.
    """
    line: DslLine | None
    error: ParseError | None
    expected_after: frozenset[str]


def detect_dsl_line(line_text: str, prefix: str = "##") -> DslDetection:
    """Check whether a host-language line carries a DSL statement.

    A line is DSL iff, after leading whitespace, it begins with ``prefix``.
    ``payload_offset`` points past the prefix and one optional space.
    """
    if not prefix:
        raise ValueError("DSL prefix must be non-empty")
    stripped = line_text.lstrip(" \t")
    if not stripped.startswith(prefix):
        return DslDetection(False, 0)
    offset = (len(line_text) - len(stripped)) + len(prefix)
    if offset < len(line_text) and line_text[offset] == " ":
        offset += 1
    return DslDetection(True, offset)


def _decode_string(raw: str) -> str:
    """Strip quotes and resolve ``\\'`` and ``\\\\`` escapes."""
    body = raw[1:-1]
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body) and body[i + 1] in ("'", "\\"):
            out.append(body[i + 1])
            i += 2
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def tokenize(payload: str) -> list[Token] | ParseError:
    """Lex a DSL payload; ends with an ``eol`` token on success."""
    tokens: list[Token] = []
    i = 0
    n = len(payload)
    while i < n:
        ch = payload[i]
        if ch in (" ", "\t", "\r"):
            i += 1
            continue
        start = i
        if ch in _WORD_START:
            while i < n and payload[i] in _WORD_BODY:
                i += 1
            text = payload[start:i]
            kind = "keyword" if text in KEYWORDS else "ident"
            tokens.append(Token(kind, text, (start, i)))
            continue
        if ch in _DIGITS or (ch in "+-" and i + 1 < n and payload[i + 1] in _DIGITS):
            i += 1
            while i < n and payload[i] in _DIGITS:
                i += 1
            if i + 1 < n and payload[i] == "." and payload[i + 1] in _DIGITS:
                i += 1
                while i < n and payload[i] in _DIGITS:
                    i += 1
            tokens.append(Token("number", payload[start:i], (start, i)))
            continue
        if ch == "'":
            i += 1
            while i < n:
                if payload[i] == "\\" and i + 1 < n and payload[i + 1] in ("'", "\\"):
                    i += 2
                elif payload[i] == "'":
                    break
                else:
                    i += 1
            if i >= n:
                return ParseError(start, payload[start:], frozenset({"closing quote"}))
            i += 1
            tokens.append(Token("string", payload[start:i], (start, i)))
            continue
        for punct in _PUNCTS:
            if payload.startswith(punct, i):
                i += len(punct)
                tokens.append(Token("punct", punct, (start, i)))
                break
        else:
            return ParseError(i, ch, frozenset({"valid token"}))
    tokens.append(Token("eol", "", (n, n)))
    return tokens


class _ParseFailure(Exception):
    def __init__(self, error: ParseError):
        super().__init__(str(error))
        self.error = error


@dataclass
class _Parser:
    """LL(1) cursor over a token list with expected-set recording.

    Every ``accept_*`` call notes what it looked for at the current token
    index, so on failure (or at end of input) the union of notes at that
    index is exactly the set of legal continuations.
    """
    tokens: list[Token]
    pos: int = 0
    probes: dict[int, set[str]] = field(default_factory=dict)

    @property
    def cur(self) -> Token:
        return self.tokens[self.pos]

    def _note(self, desc: str) -> None:
        self.probes.setdefault(self.pos, set()).add(desc)

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self) -> None:
        tok = self.cur
        expected = frozenset(self.probes.get(self.pos, {"valid token"}))
        raise _ParseFailure(ParseError(tok.span[0], tok.text, expected))

    def semantic_fail(self, tok: Token, expected: str) -> None:
        raise _ParseFailure(ParseError(tok.span[0], tok.text, frozenset({expected})))

    # -- accept (no consume on mismatch) / expect (fail on mismatch) --------

    def accept_keyword(self, *kws: str) -> Token | None:
        for kw in kws:
            self._note(kw)
        if self.cur.kind == "keyword" and self.cur.text in kws:
            return self._advance()
        return None

    def expect_keyword(self, *kws: str) -> Token:
        tok = self.accept_keyword(*kws)
        if tok is None:
            self.fail()
        return tok

    def accept_punct(self, *ps: str) -> Token | None:
        for p in ps:
            self._note(f"'{p}'")
        if self.cur.kind == "punct" and self.cur.text in ps:
            return self._advance()
        return None

    def expect_punct(self, *ps: str) -> Token:
        tok = self.accept_punct(*ps)
        if tok is None:
            self.fail()
        return tok

    def accept_cmp(self) -> Token | None:
        self._note(DESC_CMP)
        if self.cur.kind == "punct" and self.cur.text in CMP_OPS:
            return self._advance()
        return None

    def accept_kind(self, kind: str, desc: str) -> Token | None:
        self._note(desc)
        if self.cur.kind == kind:
            return self._advance()
        return None

    def accept_ident(self) -> Token | None:
        return self.accept_kind("ident", DESC_IDENT)

    def expect_ident(self) -> Token:
        tok = self.accept_ident()
        if tok is None:
            self.fail()
        return tok

    def expect_eol(self) -> None:
        self._note(DESC_EOL)
        if self.cur.kind != "eol":
            self.fail()

    # -- grammar -------------------------------------------------------------

    def statement(self) -> DslLine:
        if self.accept_keyword("target_code"):
            self.expect_punct("=")
            choice = self.expect_keyword("spark", "pandas")
            return DslLine(None, None, (TargetOption(Target(choice.text)),))
        if self.accept_keyword("start_session"):
            self.expect_keyword("named")
            tok = self.accept_kind("string", DESC_STRING)
            if tok is None:
                self.fail()
            return DslLine(None, None, (StartSession(_decode_string(tok.text)),))
        if self.accept_keyword("stop_session"):
            return DslLine(None, None, (StopSession(),))
        assignment = None
        ident = self.accept_ident()
        if ident is not None:
            self.expect_punct("=")
            assignment = AssignTarget(ident.text)
        return self.assignable_body(assignment)

    def assignable_body(self, assignment: AssignTarget | None) -> DslLine:
        if self.accept_keyword("on"):
            src = self.expect_ident()
            self.expect_punct(":")
            return DslLine(assignment, DataframeRef(src.text), self.chain())
        if self.accept_keyword("load"):
            ops: list[ChainOp] = [self.load_tail()]
            while not isinstance(ops[-1], TERMINAL_OPS) and self.accept_punct(":"):
                ops.append(self.df_op())
            return DslLine(assignment, None, tuple(ops))
        if self.accept_keyword("schema"):
            return DslLine(assignment, None, (self.schema_tail(),))
        self.fail()

    def chain(self) -> tuple[ChainOp, ...]:
        ops = [self.df_op()]
        while not isinstance(ops[-1], TERMINAL_OPS) and self.accept_punct(":"):
            ops.append(self.df_op())
        return tuple(ops)

    def df_op(self) -> ChainOp:
        tok = self.accept_keyword(*DF_OP_KEYWORDS)
        if tok is None:
            self.fail()
        return getattr(self, "op_" + tok.text)()

    def op_select_cols(self) -> ChainOp:
        return SelectCols(self.ident_list())

    def op_select_rows(self) -> ChainOp:
        return SelectRows(self.condition())

    def op_drop_cols(self) -> ChainOp:
        return DropCols(self.ident_list())

    def op_drop_rows(self) -> ChainOp:
        return DropRows(self.condition())

    def op_group_by(self) -> ChainOp:
        cols = self.ident_list()
        self.expect_keyword("apply")
        agg = self.expect_keyword("sum", "min", "max", "mean", "count", "unique")
        return GroupBy(cols, AggFn(agg.text))

    def op_on_missing(self) -> ChainOp:
        if self.accept_keyword("fill_with"):
            return OnMissingFill(self.scalar_literal())
        if self.accept_keyword("drop_rows"):
            return OnMissingDropRows()
        self.fail()

    def op_replace(self) -> ChainOp:
        old = self.scalar_literal()
        self.expect_keyword("by")
        return Replace(old, self.scalar_literal())

    def op_apply_fun(self) -> ChainOp:
        fn = self.expect_ident()
        self.expect_keyword("on")
        axis = self.expect_keyword("cols", "rows")
        return ApplyFun(fn.text, ColsOrRows(axis.text))

    def op_append_col(self) -> ChainOp:
        return AppendCol(self.expect_ident().text)

    def op_append_row(self) -> ChainOp:
        name = self.expect_ident()
        self.expect_keyword("default")
        return AppendRow(name.text, self.scalar_literal())

    def op_sort_by(self) -> ChainOp:
        return SortBy(self.expect_ident().text)

    def op_drop_duplicates(self) -> ChainOp:
        return DropDuplicates()

    def op_rename_cols(self) -> ChainOp:
        pairs = [self.rename_pair()]
        while self.accept_punct(","):
            pairs.append(self.rename_pair())
        seen: set[str] = set()
        for old_tok, new_tok in pairs:
            if old_tok.text in seen:
                self.semantic_fail(old_tok, "unused column name")
            seen.add(old_tok.text)
        return RenameCols(tuple((o.text, n.text) for o, n in pairs))

    def rename_pair(self) -> tuple[Token, Token]:
        old = self.expect_ident()
        self.expect_keyword("to")
        return old, self.expect_ident()

    def op_show(self) -> ChainOp:
        return Show()

    def op_describe(self) -> ChainOp:
        return Describe()

    def op_return_top_N(self) -> ChainOp:
        tok = self.accept_kind("number", DESC_NUMBER)
        if tok is None:
            self.fail()
        text = tok.text.lstrip("+")
        if not text.isdigit() or int(text) < 1:
            self.semantic_fail(tok, "positive integer")
        return ReturnTopN(int(text))

    def op_count(self) -> ChainOp:
        return Count()

    def op_save(self) -> ChainOp:
        self.expect_keyword("as")
        fmt = self.expect_keyword("csv", "json")
        self.expect_keyword("to")
        return Save(FileFormat(fmt.text), self.path_literal())

    def load_tail(self) -> Load:
        fmt = None
        if self.accept_keyword("as"):
            fmt = FileFormat(self.expect_keyword("csv", "json").text)
        path = self.path_literal()
        schema = None
        if self.accept_keyword("with_schema"):
            schema = self.expect_ident().text
        return Load(fmt, path, schema)

    def ident_list(self) -> tuple[str, ...]:
        names = [self.expect_ident().text]
        while self.accept_punct(","):
            names.append(self.expect_ident().text)
        return tuple(names)

    def path_literal(self) -> Literal:
        tok = self.accept_kind("string", DESC_STRING)
        if tok is not None:
            return Str(_decode_string(tok.text))
        tok = self.accept_ident()
        if tok is not None:
            return Ident(tok.text)
        self.fail()

    def scalar_literal(self) -> Literal:
        tok = self.accept_ident()
        if tok is not None:
            return Ident(tok.text)
        tok = self.accept_kind("string", DESC_STRING)
        if tok is not None:
            return Str(_decode_string(tok.text))
        tok = self.accept_kind("number", DESC_NUMBER)
        if tok is not None:
            return Num(tok.text)
        self.fail()

    def schema_tail(self) -> SchemaDef:
        fields = [self.schema_field()]
        while self.accept_punct(","):
            fields.append(self.schema_field())
        return SchemaDef(tuple(fields))

    def schema_field(self) -> tuple[str, DslType]:
        name = self.expect_ident()
        self.expect_keyword("of")
        typ = self.expect_keyword("int", "str", "float", "bool")
        return name.text, DslType(typ.text)

    # -- conditions ----------------------------------------------------------

    def condition(self) -> CondExpr:
        left = self.and_expr()
        while self.accept_keyword("or"):
            left = Bool(BoolKind.OR, left, self.and_expr())
        return left

    def and_expr(self) -> CondExpr:
        left = self.cond_atom()
        while self.accept_keyword("and"):
            left = Bool(BoolKind.AND, left, self.cond_atom())
        return left

    def cond_atom(self) -> CondExpr:
        col = self.expect_ident()
        op = self.accept_cmp()
        if op is not None:
            return Cmp(col.text, CmpOp(op.text), self.scalar_literal())
        if self.accept_keyword("in"):
            return Member(col.text, False, self.bracket_list())
        if self.accept_keyword("not"):
            self.expect_keyword("in")
            return Member(col.text, True, self.bracket_list())
        self.fail()

    def bracket_list(self) -> tuple[Literal, ...]:
        self.expect_punct("[")
        values = [self.scalar_literal()]
        while self.accept_punct(","):
            values.append(self.scalar_literal())
        self.expect_punct("]")
        return tuple(values)


def parse_line(payload: str) -> DslLine | ParseError:
    """Parse one DSL payload (text after the ``##`` prefix)."""
    result = analyze(payload)
    return result.line if result.line is not None else result.error


def analyze(payload: str) -> ParseAnalysis:
    """Parse and report the legal continuations at the end of the payload."""
    tokens = tokenize(payload)
    if isinstance(tokens, ParseError):
        return ParseAnalysis(None, tokens, frozenset())
    parser = _Parser(tokens)
    eol_index = len(tokens) - 1
    eol_col = tokens[eol_index].span[0]
    try:
        line = parser.statement()
        parser.expect_eol()
    except _ParseFailure as failure:
        err = failure.error
        after = err.expected if err.position >= eol_col else frozenset()
        return ParseAnalysis(None, err, after)
    return ParseAnalysis(line, None, frozenset(parser.probes.get(eol_index, ())))


def parse_condition(tokens: list[Token]) -> CondExpr | ParseError:
    """Parse a full token stream as a bare condition (testing hook)."""
    toks = list(tokens)
    if not toks or toks[-1].kind != "eol":
        end = toks[-1].span[1] if toks else 0
        toks.append(Token("eol", "", (end, end)))
    parser = _Parser(toks)
    try:
        cond = parser.condition()
        parser.expect_eol()
    except _ParseFailure as failure:
        return failure.error
    return cond
