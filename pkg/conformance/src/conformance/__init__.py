"""Conformance harness: executes generated Pandas/Spark code against fixtures."""

from conformance.harness import (
    Fixture,
    FixtureResult,
    discover_fixtures,
    frames_equal,
    generate_snippets,
    run_fixture,
    spark_session,
)

__all__ = [
    "Fixture",
    "FixtureResult",
    "discover_fixtures",
    "frames_equal",
    "generate_snippets",
    "run_fixture",
    "spark_session",
]
