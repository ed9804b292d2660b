"""Cross-target conformance harness.

Drives the ``tabledsl`` CLI as a black box: each fixture's DSL statement is
transpiled for both targets, the snippets are syntax-checked with
``compile()``, executed against a small CSV in an isolated namespace and
working directory, and the results compared.  Frames are compared after
normalization (rows and columns sorted, aggregation column names unwrapped,
Spark results converted through pandas), matching Spark's unordered
semantics.  Spark runs in local mode and is optional: when no usable
installation exists, cross-target comparisons report a skip reason instead
of failing, and the Pandas half still runs.
"""

from __future__ import annotations

import contextlib
import io
import os
import re
import shutil
import subprocess
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import pandas as pd

FIXTURE_DIR = Path(__file__).resolve().parents[2] / "fixtures"
GENERATED_MARKER = "# <tabledsl>"
EQUIVALENCES = ("frame-equal", "scalar-equal", "effect-only")

_AGG_COLUMN_RE = re.compile(r"(?:sum|min|max|avg|mean|count|collect_set)\((.+)\)")


@dataclass(frozen=True)
class Fixture:
    name: str
    csv_path: str
    dsl_statement: str
    expected_equivalence: str


@dataclass
class FixtureResult:
    fixture: Fixture
    passed: bool
    detail: str
    spark_skipped: str | None = None


def parse_fixture(path: Path) -> Fixture:
    values: dict[str, str] = {}
    for raw in path.read_text().splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"{path}: expected key=value, got {raw!r}")
        values[key.strip()] = value.strip()
    missing = {"name", "csv", "dsl", "equivalence"} - set(values)
    if missing:
        raise ValueError(f"{path}: missing fields {sorted(missing)}")
    if values["equivalence"] not in EQUIVALENCES:
        raise ValueError(f"{path}: equivalence must be one of {EQUIVALENCES}")
    return Fixture(values["name"], values["csv"], values["dsl"], values["equivalence"])


def discover_fixtures(directory: Path = FIXTURE_DIR) -> list[Fixture]:
    return [parse_fixture(p) for p in sorted(directory.glob("*.fixture"))]


# ---------------------------------------------------------------------------
# Code generation through the primary CLI

def tabledsl_command() -> list[str]:
    exe = shutil.which("tabledsl")
    if exe:
        return [exe]
    return [sys.executable, "-m", "tabledsl"]


def generate_snippets(statements: list[str], target: str) -> list[str | None]:
    """Transpile all statements in one CLI run; None marks empty emission."""
    with tempfile.TemporaryDirectory() as tmp:
        source = Path(tmp) / "batch.py"
        source.write_text("".join(f"## {s}\n" for s in statements))
        proc = subprocess.run(
            tabledsl_command() + ["transpile", str(source), "--target", target],
            capture_output=True, text=True, timeout=120,
        )
    if proc.returncode != 0:
        raise RuntimeError(f"tabledsl transpile failed: {proc.stderr}")
    snippets: list[str | None] = [None] * len(statements)
    index = -1
    for line in proc.stdout.split("\n"):
        if line.startswith("## "):
            index += 1
        elif line.rstrip().endswith(GENERATED_MARKER):
            code = line.rstrip()[: -len(GENERATED_MARKER)].rstrip()
            snippets[index] = code
    return snippets


def syntax_check(code: str, name: str) -> None:
    compile(code, f"<generated:{name}>", "exec")


# ---------------------------------------------------------------------------
# Execution

@contextlib.contextmanager
def fixture_workdir():
    """Temporary working directory seeded with all fixture data files."""
    previous = os.getcwd()
    with tempfile.TemporaryDirectory() as tmp:
        for data in list(FIXTURE_DIR.glob("*.csv")) + list(FIXTURE_DIR.glob("*.json")):
            shutil.copy(data, tmp)
        os.chdir(tmp)
        try:
            yield Path(tmp)
        finally:
            os.chdir(previous)


def execute_pandas(fixture: Fixture, code: str) -> dict:
    """Run a Pandas snippet with the fixture loaded as ``df``; returns the
    namespace after execution (stdout swallowed: ``show`` prints)."""
    with fixture_workdir():
        namespace = {"pd": pd, "df": pd.read_csv(FIXTURE_DIR / fixture.csv_path)}
        with contextlib.redirect_stdout(io.StringIO()):
            exec(compile(code, f"<pandas:{fixture.name}>", "exec"), namespace)
        namespace["_workdir_entries"] = sorted(os.listdir("."))
    return namespace


_spark_state: tuple[object | None, str | None] | None = None


def spark_session() -> tuple[object | None, str | None]:
    """A cached local SparkSession, or (None, reason) when unavailable."""
    global _spark_state
    if _spark_state is not None:
        return _spark_state
    try:
        from pyspark.sql import SparkSession
    except ImportError:
        _spark_state = (None, "pyspark is not installed")
        return _spark_state
    try:
        session = (SparkSession.builder.master("local[1]")
                   .appName("tabledsl-conformance")
                   .config("spark.ui.enabled", "false")
                   .getOrCreate())
        _spark_state = (session, None)
    except Exception as exc:  # no JVM, typically
        _spark_state = (None, f"cannot start local Spark: {exc}")
    return _spark_state


def execute_spark(fixture: Fixture, code: str, session) -> dict:
    from pyspark.sql import functions as sql_functions
    from pyspark.sql import types as sql_types
    from pyspark.sql.session import SparkSession

    with fixture_workdir():
        df = session.read.csv(str(FIXTURE_DIR / fixture.csv_path),
                              header=True, inferSchema=True)
        namespace = {
            "spark": session, "df": df,
            "SparkSession": SparkSession,
            "lit": sql_functions.lit, "collect_set": sql_functions.collect_set,
        }
        for type_name in ("StructType", "StructField", "IntegerType",
                          "StringType", "FloatType", "BooleanType"):
            namespace[type_name] = getattr(sql_types, type_name)
        with contextlib.redirect_stdout(io.StringIO()):
            exec(compile(code, f"<spark:{fixture.name}>", "exec"), namespace)
        namespace["_workdir_entries"] = sorted(os.listdir("."))
    return namespace


# ---------------------------------------------------------------------------
# Result comparison

def normalize_frame(obj) -> pd.DataFrame | None:
    """Coerce an execution result to a comparable pandas frame, or None."""
    try:
        from pyspark.sql import DataFrame as SparkFrame
        from pyspark.sql import Row
    except ImportError:
        SparkFrame, Row = (), ()  # isinstance(x, ()) is always False
    if isinstance(obj, SparkFrame):
        obj = obj.toPandas()
    elif isinstance(obj, list) and obj and all(isinstance(r, Row) for r in obj):
        obj = pd.DataFrame([r.asDict() for r in obj])
    if not isinstance(obj, pd.DataFrame):
        return None
    frame = obj.copy()
    if not isinstance(frame.index, pd.RangeIndex):
        frame = frame.reset_index()
    frame.columns = [_AGG_COLUMN_RE.fullmatch(str(c)).group(1)
                     if _AGG_COLUMN_RE.fullmatch(str(c)) else str(c)
                     for c in frame.columns]
    frame = frame.reindex(sorted(frame.columns), axis=1)
    if len(frame):
        frame = frame.sort_values(by=list(frame.columns), na_position="last")
    return frame.reset_index(drop=True)


def frames_equal(a, b) -> tuple[bool, str]:
    left, right = normalize_frame(a), normalize_frame(b)
    if left is None or right is None:
        return False, f"not frames: {type(a).__name__} vs {type(b).__name__}"
    if list(left.columns) != list(right.columns):
        return False, f"columns differ: {list(left.columns)} vs {list(right.columns)}"
    if len(left) != len(right):
        return False, f"row counts differ: {len(left)} vs {len(right)}"
    for col in left.columns:
        lhs, rhs = left[col], right[col]
        for i in range(len(lhs)):
            lv, rv = lhs.iloc[i], rhs.iloc[i]
            if pd.isna(lv) and pd.isna(rv):
                continue
            if pd.isna(lv) or pd.isna(rv) or not _values_equal(lv, rv):
                return False, f"cell [{i}][{col}] differs: {lv!r} vs {rv!r}"
    return True, "frames equal"


def _values_equal(a, b) -> bool:
    for numeric in (int, float):
        if isinstance(a, numeric) or isinstance(b, numeric):
            try:
                return float(a) == float(b)
            except (TypeError, ValueError):
                return False
    return a == b


def run_fixture(fixture: Fixture,
                pandas_code: str | None = None,
                spark_code: str | None = None) -> FixtureResult:
    """Full check for one fixture; transpiles on demand when codes not given."""
    if pandas_code is None:
        pandas_code = generate_snippets([fixture.dsl_statement], "pandas")[0]
    if spark_code is None:
        spark_code = generate_snippets([fixture.dsl_statement], "spark")[0]
    if pandas_code is None or spark_code is None:
        return FixtureResult(fixture, False, "fixture op has no dual-target rendering")
    for label, code in (("pandas", pandas_code), ("spark", spark_code)):
        try:
            syntax_check(code, f"{fixture.name}:{label}")
        except SyntaxError as exc:
            return FixtureResult(fixture, False, f"{label} snippet invalid: {exc}")

    try:
        pandas_ns = execute_pandas(fixture, pandas_code)
    except Exception as exc:
        return FixtureResult(fixture, False, f"pandas execution raised: {exc!r}")

    session, reason = spark_session()
    if session is None:
        return FixtureResult(fixture, True,
                             "pandas executed; cross-target comparison skipped",
                             spark_skipped=reason)
    try:
        spark_ns = execute_spark(fixture, spark_code, session)
    except Exception as exc:
        return FixtureResult(fixture, False, f"spark execution raised: {exc!r}")

    if fixture.expected_equivalence == "effect-only":
        return FixtureResult(fixture, True, "both targets executed")
    left = pandas_ns.get("result")
    right = spark_ns.get("result")
    if fixture.expected_equivalence == "scalar-equal":
        ok = _values_equal(left, right)
        return FixtureResult(fixture, ok, f"{left!r} vs {right!r}")
    ok, detail = frames_equal(left, right)
    return FixtureResult(fixture, ok, detail)
