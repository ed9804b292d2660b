"""tabledsl: a pseudo-comment DSL for dataframe work.

Statements like ``## x = on y : select_cols a, b : count`` live in ordinary
host-language comments and transpile to Pandas or Spark code.  The package
bundles the parser, the two code generators, a grammar-driven completion
engine, a Language Server hub and a batch CLI.
"""

from tabledsl.ast import DslLine, Target, pretty_print, structural_eq
from tabledsl.codegen import GenContext, GenResult, generate
from tabledsl.completion import CompletionItem, complete
from tabledsl.parser import ParseError, analyze, detect_dsl_line, parse_line, tokenize

__version__ = "0.1.0"

__all__ = [
    "CompletionItem",
    "DslLine",
    "GenContext",
    "GenResult",
    "ParseError",
    "Target",
    "analyze",
    "complete",
    "detect_dsl_line",
    "generate",
    "parse_line",
    "pretty_print",
    "structural_eq",
    "tokenize",
    "__version__",
]
