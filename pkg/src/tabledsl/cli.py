"""Batch command-line interface.

Subcommands: ``transpile`` (insert generated code under each DSL comment),
``check`` (diagnostics only), ``complete`` (scriptable completion queries),
``corpus-report`` (coverage classification) and ``serve`` (language server).

Exit codes: 0 ok, 1 DSL errors or classification mismatch, 2 I/O or usage.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import tempfile
from dataclasses import dataclass
from importlib import resources

from tabledsl.ast import Target, TargetOption
from tabledsl.codegen import GenContext, GenResult, GenWarning, generate
from tabledsl.completion import complete, document_identifiers
from tabledsl.corpus import CorpusFormatError, classify_corpus, load_corpus, render_report
from tabledsl.lsp import load_config, nearest_target, serve
from tabledsl.parser import ParseError, analyze, detect_dsl_line

GENERATED_MARKER = "# <tabledsl>"


@dataclass(frozen=True)
class LineRecord:
    """Outcome for one DSL line; ``line_no`` is 1-based."""
    line_no: int
    dsl_text: str
    status: str  # generated | empty-emission | parse-error
    output_text: str | None = None
    error: ParseError | None = None


@dataclass(frozen=True)
class TranspileReport:
    records: tuple[LineRecord, ...]

    @property
    def errors(self) -> tuple[LineRecord, ...]:
        return tuple(r for r in self.records if r.status == "parse-error")


def transpile_text(text: str, target: Target, prefix: str = "##") -> tuple[str, TranspileReport]:
    """Rewrite host-language text, regenerating the line under each DSL comment.

    Generated lines carry a trailing ``# <tabledsl>`` marker so a later run
    replaces them instead of stacking duplicates; the rewrite is idempotent.
    ``target_code`` directives switch the target for the lines below them.
    """
    lines = text.split("\n")
    out: list[str] = []
    records: list[LineRecord] = []
    current = target
    idx = 0
    while idx < len(lines):
        raw = lines[idx]
        idx += 1
        out.append(raw)
        detection = detect_dsl_line(raw, prefix)
        if not detection.is_dsl:
            continue
        payload = raw[detection.payload_offset:]
        line_no = idx  # already advanced: 1-based position of `raw`
        outcome = analyze(payload)
        if outcome.error is not None:
            records.append(LineRecord(line_no, payload, "parse-error",
                                      error=outcome.error))
            continue
        # Consume a previously generated line so it gets replaced (or dropped).
        if idx < len(lines) and lines[idx].rstrip().endswith(GENERATED_MARKER):
            idx += 1
        parsed = outcome.line
        if isinstance(parsed.chain[0], TargetOption):
            current = parsed.chain[0].target
            result = GenResult("", (GenWarning(
                "target_code", f"target switched to {current.value}"),))
        else:
            result = generate(parsed, GenContext(current))
        if result.code:
            indent = raw[: len(raw) - len(raw.lstrip(" \t"))]
            generated_line = f"{indent}{result.code}  {GENERATED_MARKER}"
            out.append(generated_line)
            records.append(LineRecord(line_no, payload, "generated",
                                      output_text=generated_line))
        else:
            records.append(LineRecord(line_no, payload, "empty-emission",
                                      output_text="; ".join(
                                          f"{w.op}: {w.message}" for w in result.warnings)))
    return "\n".join(out), TranspileReport(tuple(records))


def transpile(input_path: str, target: Target, mode: str = "stdout",
              prefix: str = "##") -> tuple[str, TranspileReport]:
    """File-level transpile; in-place mode writes atomically and only when clean."""
    with open(input_path, encoding="utf-8") as fh:
        text = fh.read()
    new_text, report = transpile_text(text, target, prefix)
    if mode == "in-place" and not report.errors:
        directory = os.path.dirname(os.path.abspath(input_path))
        fd, tmp_path = tempfile.mkstemp(dir=directory, prefix=".tabledsl-")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as tmp:
                tmp.write(new_text)
            os.replace(tmp_path, input_path)
        except BaseException:
            os.unlink(tmp_path)
            raise
    return new_text, report


def _print_diagnostics(path: str, report: TranspileReport) -> None:
    for record in report.errors:
        err = record.error
        print(f"{path}:{record.line_no}:{err.position + 1}: {err}", file=sys.stderr)


def _cmd_transpile(args) -> int:
    mode = "in-place" if args.in_place else "stdout"
    new_text, report = transpile(args.file, Target(args.target), mode, args.prefix)
    for record in report.records:
        if record.status == "empty-emission":
            print(f"{args.file}:{record.line_no}: no emission: {record.output_text}",
                  file=sys.stderr)
    _print_diagnostics(args.file, report)
    if mode == "stdout":
        sys.stdout.write(new_text)
    return 1 if report.errors else 0


def _cmd_check(args) -> int:
    with open(args.file, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    clean = True
    for i, raw in enumerate(lines, start=1):
        detection = detect_dsl_line(raw, args.prefix)
        if not detection.is_dsl:
            continue
        outcome = analyze(raw[detection.payload_offset:])
        if outcome.error is not None:
            err = outcome.error
            col = detection.payload_offset + err.position + 1
            expected = ", ".join(sorted(err.expected))
            print(f"{args.file}:{i}:{col}: expected {{{expected}}}")
            clean = False
    return 0 if clean else 1


def _cmd_complete(args) -> int:
    with open(args.file, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if not 0 <= args.line < len(lines):
        print(f"line {args.line} out of range", file=sys.stderr)
        return 2
    target = nearest_target(lines, args.line, Target(args.target), args.prefix)
    idents = document_identifiers(lines, args.line, args.prefix)
    items = complete(lines[args.line], args.col, GenContext(target),
                     prefix=args.prefix, known_idents=idents)
    for item in items:
        print(f"{item.rank}\t{item.kind}\t{item.label}")
    return 0


_BUNDLED_CORPORA = {"spark": "spark.corpus", "pandas": "pandas.corpus"}


def _resolve_corpus_path(name: str) -> str:
    if name in _BUNDLED_CORPORA and not os.path.exists(name):
        return str(resources.files("tabledsl").joinpath("corpora",
                                                        _BUNDLED_CORPORA[name]))
    return name


def _cmd_corpus_report(args) -> int:
    path = _resolve_corpus_path(args.corpus)
    try:
        target, entries = load_corpus(path)
    except CorpusFormatError as exc:
        print(f"{path}: {exc}", file=sys.stderr)
        return 2
    report = classify_corpus(target, entries)
    print(render_report(report))
    return 1 if report.hard_mismatches else 0


def _cmd_serve(args) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(name)s: %(levelname)s: %(message)s")
    config = load_config(args.config)
    return serve(config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabledsl",
        description="Transpile dataframe-DSL pseudo-comments to Pandas or Spark code.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("transpile", help="insert generated code below each DSL comment")
    p.add_argument("file")
    p.add_argument("--target", choices=["pandas", "spark"], required=True)
    p.add_argument("--in-place", action="store_true",
                   help="rewrite the file (atomically) instead of printing")
    p.add_argument("--prefix", default="##", help="DSL comment prefix (default ##)")
    p.set_defaults(func=_cmd_transpile)

    p = sub.add_parser("check", help="report DSL syntax errors, one line each")
    p.add_argument("file")
    p.add_argument("--prefix", default="##")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("complete", help="print completions for a cursor position")
    p.add_argument("file")
    p.add_argument("--line", type=int, required=True, help="0-based line")
    p.add_argument("--col", type=int, required=True, help="0-based column")
    p.add_argument("--target", choices=["pandas", "spark"], default="pandas",
                   help="target when no target_code directive precedes the line")
    p.add_argument("--prefix", default="##")
    p.set_defaults(func=_cmd_complete)

    p = sub.add_parser("corpus-report",
                       help="classify a coverage corpus (FT/CA/CM/NS)")
    p.add_argument("corpus",
                   help="corpus file path, or 'spark'/'pandas' for the bundled ones")
    p.set_defaults(func=_cmd_corpus_report)

    p = sub.add_parser("serve", help="run the LSP hub over stdio")
    p.add_argument("--config", default=None,
                   help="key=value config file (default: $TABLEDSL_CONFIG)")
    p.set_defaults(func=_cmd_serve)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"tabledsl: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
