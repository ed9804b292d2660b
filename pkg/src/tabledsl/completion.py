"""Grammar-driven completion for a cursor position inside a DSL line.

Suggestions come straight from the parser's expected-token sets, so every
offered keyword is guaranteed to extend the statement.  When the text up to
the cursor already parses, the first item is a preview of the generated
target code; accepting it inserts that code (the DSL line itself stays put
as a comment).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from tabledsl.codegen import GenContext, generate
from tabledsl.parser import (
    DESC_IDENT,
    KEYWORDS,
    analyze,
    detect_dsl_line,
    tokenize,
)

KIND_KEYWORD = "keyword"
KIND_PREVIEW = "preview"
KIND_IDENTIFIER = "identifier"

_PARTIAL_WORD_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

# Label for the placeholder shown when the grammar accepts any identifier.
IDENT_HINT = "identifier"


@dataclass(frozen=True)
class CompletionItem:
    label: str
    detail: str
    insert_text: str
    rank: int
    kind: str  # keyword | preview | identifier

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("ranks start at 1")
        if self.kind not in (KIND_KEYWORD, KIND_PREVIEW, KIND_IDENTIFIER):
            raise ValueError(f"unknown completion kind {self.kind!r}")


@dataclass(frozen=True)
class KeywordDoc:
    keyword: str
    summary: str
    example: str


def _doc(keyword: str, summary: str, example: str) -> tuple[str, KeywordDoc]:
    return keyword, KeywordDoc(keyword, summary, example)


KEYWORD_DOCS: dict[str, KeywordDoc] = dict([
    _doc("load", "Read a dataframe from a file.", "result = load as csv 'data.csv'"),
    _doc("as", "Names the file format of a load or save.", "load as json 'data.json'"),
    _doc("csv", "Comma-separated-values file format.", "load as csv 'data.csv'"),
    _doc("json", "JSON file format.", "save as json to 'out.json'"),
    _doc("save", "Write the dataframe to a file.", "on df : save as csv to 'out.csv'"),
    _doc("to", "Destination marker in save paths and rename pairs.",
         "rename_cols c1 to p"),
    _doc("on", "Names the dataframe a chain works on; also the apply_fun axis marker.",
         "on df : show"),
    _doc("select_cols", "Keep only the named columns.", "on df : select_cols a, b"),
    _doc("select_rows", "Keep rows matching a condition.", "on df : select_rows col1 > 0"),
    _doc("drop_cols", "Remove the named columns.", "on df : drop_cols x, y"),
    _doc("drop_rows", "Remove rows matching a condition; also the on_missing drop mode.",
         "on df : drop_rows col1 > 0"),
    _doc("and", "Both conditions must hold; binds tighter than or.",
         "col1 > 0 and col2 < 3"),
    _doc("or", "Either condition may hold.", "col1 == m or col2 < 3"),
    _doc("in", "Row value is a member of the bracketed list.", "col3 in [v1, v2, v3]"),
    _doc("not", "Negates a membership test.", "col2 not in [v1, v2]"),
    _doc("group_by", "Group rows by columns and aggregate each group.",
         "on df : group_by col1 apply sum"),
    _doc("apply", "Introduces the aggregation applied to each group.",
         "group_by col1 apply min"),
    _doc("sum", "Aggregation: sum of each group.", "group_by col1 apply sum"),
    _doc("min", "Aggregation: minimum of each group.", "group_by col1 apply min"),
    _doc("max", "Aggregation: maximum of each group.", "group_by col1 apply max"),
    _doc("mean", "Aggregation: mean of each group.", "group_by col1 apply mean"),
    _doc("count", "Row count of the result; as aggregation, the size of each group.",
         "on df : select_rows col1 == m : count"),
    _doc("unique", "Aggregation: distinct values of each group.",
         "group_by col1 apply unique"),
    _doc("on_missing", "Handle missing values: fill them or drop their rows.",
         "on df : on_missing fill_with 0"),
    _doc("fill_with", "Value written into missing entries.", "on_missing fill_with 0"),
    _doc("replace", "Substitute one value for another across the dataframe.",
         "on df : replace 0 by 1"),
    _doc("by", "Introduces the replacement value.", "replace old_value by new_value"),
    _doc("apply_fun", "Apply a named function along columns or rows (Pandas only).",
         "on df : apply_fun f on cols"),
    _doc("cols", "Column axis for apply_fun.", "apply_fun f on cols"),
    _doc("rows", "Row axis for apply_fun.", "apply_fun f on rows"),
    _doc("append_col", "Add a new, empty column.", "on df : append_col extra"),
    _doc("append_row", "Add a row holding a default value (Pandas only).",
         "on df : append_row col_name default 0"),
    _doc("default", "Introduces the append_row default value.",
         "append_row col_name default 0"),
    _doc("sort_by", "Sort rows by one column, ascending.", "on df : sort_by col"),
    _doc("drop_duplicates", "Remove duplicated rows.", "on df : drop_duplicates"),
    _doc("rename_cols", "Rename columns pairwise.", "on df : rename_cols c1 to p, c2 to q"),
    _doc("show", "Print the dataframe.", "on df : show"),
    _doc("describe", "Print summary statistics per column.", "on df : describe"),
    _doc("return_top_N", "First N rows as a new dataframe.", "on df : return_top_N 10"),
    _doc("start_session", "Create the Spark session (Spark only).",
         "start_session named 'app'"),
    _doc("named", "Introduces the session name.", "start_session named 'app'"),
    _doc("stop_session", "Shut the Spark session down (Spark only).", "stop_session"),
    _doc("schema", "Declare column names and types for loading (Spark only).",
         "s = schema col1 of int, col2 of str"),
    _doc("of", "Joins a schema column to its type.", "schema col1 of int"),
    _doc("int", "Integer column type.", "schema col1 of int"),
    _doc("str", "String column type.", "schema col2 of str"),
    _doc("float", "Floating-point column type.", "schema col3 of float"),
    _doc("bool", "Boolean column type.", "schema col4 of bool"),
    _doc("with_schema", "Attach a declared schema to a load (Spark only).",
         "result = load 'data.txt' with_schema s"),
    _doc("target_code", "Choose the generation target for following lines.",
         "target_code = spark"),
    _doc("spark", "Generate Apache Spark code.", "target_code = spark"),
    _doc("pandas", "Generate Pandas code.", "target_code = pandas"),
])


def document_identifiers(lines, upto_line: int, prefix: str = "##") -> tuple[str, ...]:
    """Identifiers appearing in DSL lines before ``upto_line``, sorted."""
    names: set[str] = set()
    for line in lines[:upto_line]:
        detection = detect_dsl_line(line, prefix)
        if not detection.is_dsl:
            continue
        tokens = tokenize(line[detection.payload_offset:])
        if isinstance(tokens, list):
            names.update(t.text for t in tokens if t.kind == "ident")
    return tuple(sorted(names))


def complete(line_text: str, cursor_col: int, ctx: GenContext, *,
             prefix: str = "##", known_idents=()) -> list[CompletionItem]:
    """Ranked suggestions for a cursor position in a DSL line.

    When the payload up to the cursor is a complete statement, the first
    item previews the generated code; the rest are grammar keywords and
    identifier candidates legal at the cursor, filtered by the partial word
    being typed and ordered alphabetically.
    """
    detection = detect_dsl_line(line_text, prefix)
    if not detection.is_dsl:
        return []
    cursor_col = max(0, min(cursor_col, len(line_text)))
    if cursor_col < detection.payload_offset:
        return []
    payload = line_text[detection.payload_offset:cursor_col]
    match = _PARTIAL_WORD_RE.search(payload)
    partial = match.group(0) if match else ""

    items: list[CompletionItem] = []
    outcome = analyze(payload)
    if outcome.line is not None:
        result = generate(outcome.line, ctx)
        detail = f"generated {ctx.target.value} code"
        if not result.code and result.warnings:
            detail = result.warnings[0].message
        items.append(CompletionItem(
            label=f"⇒ {result.code}", detail=detail, insert_text=result.code,
            rank=1, kind=KIND_PREVIEW,
        ))
        if partial:
            # The word under the cursor just completed the statement; keep
            # offering it (and its siblings) so typing never drops a match.
            expected = analyze(payload[: len(payload) - len(partial)]).expected_after
        else:
            expected = outcome.expected_after
    elif partial:
        stem = analyze(payload[: len(payload) - len(partial)])
        expected = stem.expected_after
    else:
        expected = outcome.expected_after
    if not expected:
        return items

    labelled: list[tuple[str, str, str]] = []  # label, detail, kind
    for kw in expected & KEYWORDS:
        if kw.startswith(partial):
            labelled.append((kw, KEYWORD_DOCS[kw].summary, KIND_KEYWORD))
    if DESC_IDENT in expected:
        for name in known_idents:
            if name.startswith(partial):
                labelled.append((name, "identifier from this document", KIND_IDENTIFIER))
        if IDENT_HINT.startswith(partial):
            labelled.append((IDENT_HINT, "any dataframe, column or variable name",
                             KIND_IDENTIFIER))
    for label, detail, kind in sorted(set(labelled)):
        items.append(CompletionItem(label=label, detail=detail, insert_text=label,
                                    rank=len(items) + 1, kind=kind))
    return items
