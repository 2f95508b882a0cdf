"""Uniform reservoir samples over streaming multi-way joins."""

from ._joinsample import (
    Engine,
    Error,
    ParseError,
    Query,
    Stream,
    load_query,
    parse_query,
    read_stream,
    rswp,
    run,
    validate,
)

__all__ = [
    "Engine",
    "Error",
    "ParseError",
    "Query",
    "Stream",
    "load_query",
    "parse_query",
    "read_stream",
    "rswp",
    "run",
    "validate",
]
