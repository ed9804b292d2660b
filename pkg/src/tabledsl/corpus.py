"""Coverage-corpus format and FT/CA/CM/NS classification.

A corpus file encodes the processing steps of a tutorial-style scenario,
one entry per step, and declares which generation target its expected code
is written for.  Entries are separated by ``---`` lines::

    target: spark
    ---
    id: s01
    desc: inspect the loaded frame
    category: FT
    dsl: on df : show
    expected: df.show()

``expected:`` may span several lines (everything up to the next separator).
Entries without a ``dsl:`` field are steps the DSL cannot express (NS).

Classification is two-layered: the declared ``category`` is authoritative,
while a token heuristic (byte equality for FT, proper token subsequence for
CA) recomputes it from the generated code.  CA/CM boundaries are human
judgment, so a disagreement there is only flagged; a declared FT that fails
byte equality (or vice versa) is a hard mismatch because byte equality is
objective.
"""

from __future__ import annotations

import io
import re
import tokenize as py_tokenize
from dataclasses import dataclass

from tabledsl.ast import Target, TargetOption
from tabledsl.codegen import GenContext, generate
from tabledsl.parser import ParseError, parse_line

CATEGORIES = ("FT", "CA", "CM", "NS")

CATEGORY_TITLES = {
    "FT": "Fully translated (FT)",
    "CA": "Code added (CA)",
    "CM": "Code modified (CM)",
    "NS": "DSL not suitable (NS)",
}


class CorpusFormatError(Exception):
    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    description: str
    dsl: str | None
    expected_code: str
    category: str
    line_no: int


@dataclass(frozen=True)
class ClassifiedEntry:
    entry: CorpusEntry
    generated: str | None
    parse_error: ParseError | None
    heuristic: str
    final: str
    hard_mismatch: str | None  # reason, when the declared category is untenable
    flag: str | None  # soft CA/CM disagreement note


@dataclass(frozen=True)
class CorpusReport:
    target: Target
    classified: tuple[ClassifiedEntry, ...]

    @property
    def total(self) -> int:
        return len(self.classified)

    def count(self, category: str) -> int:
        return sum(1 for c in self.classified if c.final == category)

    @property
    def hard_mismatches(self) -> tuple[ClassifiedEntry, ...]:
        return tuple(c for c in self.classified if c.hard_mismatch)

    @property
    def flags(self) -> tuple[ClassifiedEntry, ...]:
        return tuple(c for c in self.classified if c.flag)


def parse_corpus(text: str, source: str = "<corpus>") -> tuple[Target, list[CorpusEntry]]:
    """Parse corpus text into its target and entries.

    Raises :class:`CorpusFormatError` with a line number on malformed input.
    """
    lines = text.split("\n")
    blocks: list[tuple[int, list[str]]] = []
    current: list[str] = []
    start = 1
    for idx, raw in enumerate(lines, start=1):
        if raw.strip() == "---":
            blocks.append((start, current))
            current = []
            start = idx + 1
        else:
            current.append(raw)
    blocks.append((start, current))

    header_no, header = blocks[0]
    target = None
    for offset, raw in enumerate(header):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition(":")
        if key.strip() != "target":
            raise CorpusFormatError("corpus header accepts only 'target:'",
                                    header_no + offset)
        try:
            target = Target(value.strip())
        except ValueError:
            raise CorpusFormatError(f"unknown target {value.strip()!r}",
                                    header_no + offset) from None
    if target is None:
        raise CorpusFormatError("missing 'target: pandas|spark' header", header_no)

    entries = []
    for block_no, block in blocks[1:]:
        if not any(line.strip() for line in block):
            continue
        entries.append(_parse_entry(block, block_no))
    return target, entries


def _parse_entry(block: list[str], block_no: int) -> CorpusEntry:
    fields: dict[str, str] = {}
    expected_lines: list[str] | None = None
    for offset, raw in enumerate(block):
        line_no = block_no + offset
        if expected_lines is not None:
            expected_lines.append(raw)
            continue
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = raw.partition(":")
        if not sep:
            raise CorpusFormatError(f"expected 'field: value', got {raw!r}", line_no)
        key = key.strip()
        if key == "expected":
            expected_lines = []
            if value.strip():
                expected_lines.append(value.strip())
        elif key in ("id", "desc", "category", "dsl"):
            if key in fields:
                raise CorpusFormatError(f"duplicate field {key!r}", line_no)
            fields[key] = value.strip()
        else:
            raise CorpusFormatError(f"unknown field {key!r}", line_no)

    if "id" not in fields:
        raise CorpusFormatError("entry is missing 'id:'", block_no)
    category = fields.get("category", "")
    if category not in CATEGORIES:
        raise CorpusFormatError(f"category must be one of {CATEGORIES}", block_no)
    if expected_lines is None:
        raise CorpusFormatError("entry is missing 'expected:'", block_no)
    while expected_lines and not expected_lines[-1].strip():
        expected_lines.pop()
    dsl = fields.get("dsl")
    if category == "NS" and dsl is not None:
        raise CorpusFormatError("NS entries must not carry 'dsl:'", block_no)
    if category != "NS" and dsl is None:
        raise CorpusFormatError(f"{category} entries need a 'dsl:' field", block_no)
    return CorpusEntry(
        id=fields["id"],
        description=fields.get("desc", ""),
        dsl=dsl,
        expected_code="\n".join(expected_lines),
        category=category,
        line_no=block_no,
    )


def load_corpus(path: str) -> tuple[Target, list[CorpusEntry]]:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh.read(), path)


# ---------------------------------------------------------------------------
# Classification

_FALLBACK_TOKEN_RE = re.compile(
    r"[A-Za-z_][A-Za-z0-9_]*|[0-9]+(?:\.[0-9]+)?|'(?:[^'\\]|\\.)*'|\"(?:[^\"\\]|\\.)*\"|\S"
)


def python_tokens(code: str) -> list[str]:
    """Token strings of a host-language snippet (whitespace-insensitive)."""
    try:
        tokens = py_tokenize.generate_tokens(io.StringIO(code).readline)
        skip = {py_tokenize.NEWLINE, py_tokenize.NL, py_tokenize.INDENT,
                py_tokenize.DEDENT, py_tokenize.ENDMARKER, py_tokenize.COMMENT}
        return [t.string for t in tokens if t.type not in skip and t.string]
    except py_tokenize.TokenizeError:
        return _FALLBACK_TOKEN_RE.findall(code)


def is_token_subsequence(needle: list[str], haystack: list[str]) -> bool:
    """True if ``needle`` appears in ``haystack`` in order (gaps allowed)."""
    it = iter(haystack)
    return all(tok in it for tok in needle)


def heuristic_category(generated: str | None, expected: str) -> str:
    if generated is None:
        return "NS"
    if generated == expected:
        return "FT"
    gen_tokens = python_tokens(generated)
    expected_tokens = python_tokens(expected)
    if (generated and gen_tokens != expected_tokens
            and is_token_subsequence(gen_tokens, expected_tokens)):
        return "CA"
    return "CM"


def classify_entry(entry: CorpusEntry, target: Target) -> ClassifiedEntry:
    generated = None
    parse_error = None
    if entry.dsl is not None:
        parsed = parse_line(entry.dsl)
        if isinstance(parsed, ParseError):
            parse_error = parsed
        elif isinstance(parsed.chain[0], TargetOption):
            generated = ""
        else:
            generated = generate(parsed, GenContext(target)).code
    heuristic = heuristic_category(generated, entry.expected_code)
    final = entry.category
    hard = None
    flag = None
    if parse_error is not None:
        hard = f"DSL does not parse: {parse_error}"
    elif final == "FT" and heuristic != "FT":
        hard = f"declared FT but generated code differs: {generated!r}"
    elif final in ("CA", "CM") and heuristic == "FT":
        hard = "declared partial coverage but generated code matches byte-for-byte"
    elif final in ("CA", "CM") and heuristic in ("CA", "CM") and heuristic != final:
        flag = f"declared {final}, token heuristic says {heuristic}"
    return ClassifiedEntry(entry, generated, parse_error, heuristic, final, hard, flag)


def classify_corpus(target: Target, entries: list[CorpusEntry]) -> CorpusReport:
    return CorpusReport(target, tuple(classify_entry(e, target) for e in entries))


def _truncate_percent(numerator: int, denominator: int) -> str:
    if denominator == 0:
        return "0.0"
    return f"{int(numerator * 1000 / denominator) / 10:.1f}"


def render_report(report: CorpusReport) -> str:
    """Human-readable coverage table plus a one-line machine summary."""
    out = [f"Coverage for target: {report.target.value}", ""]
    out.append(f"{'Category':<24}{'Count':>14}")
    for cat in CATEGORIES:
        n = report.count(cat)
        cell = f"{n}/{report.total} ({_truncate_percent(n, report.total)}%)"
        out.append(f"{CATEGORY_TITLES[cat]:<24}{cell:>14}")
    out.append("")
    out.append(" ".join(f"{cat}={report.count(cat)}/{report.total}" for cat in CATEGORIES))
    for item in report.flags:
        out.append(f"note: {item.entry.id}: {item.flag}")
    for item in report.hard_mismatches:
        out.append(f"MISMATCH: {item.entry.id}: {item.hard_mismatch}")
    return "\n".join(out)
