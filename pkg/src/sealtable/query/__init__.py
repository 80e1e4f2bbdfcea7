from .like import match_like
from .nodes import And, Between, Comparison, Like, Not, Or, QueryAst, to_sql
from .parser import parse
from .planner import (
    Classification,
    Direct,
    KeyAnd,
    KeyOr,
    PlainFilter,
    Probe,
    QueryPlan,
    Rewritten,
    classify,
    explain,
    resolve,
    rewrite,
)

__all__ = [
    "And", "Between", "Classification", "Comparison", "Direct", "KeyAnd", "KeyOr", "Like", "Not", "Or",
    "PlainFilter", "Probe", "QueryAst", "QueryPlan", "Rewritten", "classify", "explain", "match_like",
    "parse", "resolve", "rewrite", "to_sql",
]
