"""AST for the single-table SELECT dialect, with a printer that re-parses to an equal tree."""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterator, Optional, Union

Literal = Union[int, Decimal, str]

COMPARISON_OPS = ("=", "<>", "<", "<=", ">", ">=")
KEYWORDS = frozenset({"SELECT", "FROM", "WHERE", "AND", "OR", "NOT", "BETWEEN", "LIKE"})


@dataclass(frozen=True)
class Comparison:
    column: str
    op: str
    literal: Literal


@dataclass(frozen=True)
class Between:
    column: str
    lo: Literal
    hi: Literal


@dataclass(frozen=True)
class Like:
    column: str
    pattern: str


@dataclass(frozen=True)
class And:
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class Or:
    left: "Predicate"
    right: "Predicate"


@dataclass(frozen=True)
class Not:
    child: "Predicate"


Atom = Union[Comparison, Between, Like]
Predicate = Union[Comparison, Between, Like, And, Or, Not]
ATOMS = (Comparison, Between, Like)


@dataclass(frozen=True)
class QueryAst:
    projections: tuple  # column names, or ("*",)
    table: str
    predicate: Optional[Predicate] = None

    @property
    def star(self) -> bool:
        return self.projections == ("*",)

    def __str__(self):
        return to_sql(self)


def atoms(node: Predicate | None) -> Iterator[Atom]:
    if node is None:
        return
    if isinstance(node, ATOMS):
        yield node
    elif isinstance(node, (And, Or)):
        yield from atoms(node.left)
        yield from atoms(node.right)
    else:
        yield from atoms(node.child)


def conjuncts(node: Predicate) -> list[Predicate]:
    if isinstance(node, And):
        return conjuncts(node.left) + conjuncts(node.right)
    return [node]


def conjoin(parts: list[Predicate]) -> Predicate | None:
    result = None
    for part in parts:
        result = part if result is None else And(result, part)
    return result


_PLAIN_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def quote_ident(name: str) -> str:
    if _PLAIN_IDENT.match(name) and name.upper() not in KEYWORDS:
        return name
    return '"' + name.replace('"', '""') + '"'


def literal_sql(value: Literal) -> str:
    if isinstance(value, str):
        return "'" + value.replace("'", "''") + "'"
    if isinstance(value, Decimal):
        return format(value, "f")
    return str(value)


def predicate_sql(node: Predicate, column_name=quote_ident) -> str:
    """Render a predicate; binary nodes are fully parenthesised."""
    if isinstance(node, Comparison):
        return f"{column_name(node.column)} {node.op} {literal_sql(node.literal)}"
    if isinstance(node, Between):
        return f"{column_name(node.column)} BETWEEN {literal_sql(node.lo)} AND {literal_sql(node.hi)}"
    if isinstance(node, Like):
        return f"{column_name(node.column)} LIKE {literal_sql(node.pattern)}"
    if isinstance(node, Not):
        return f"NOT ({predicate_sql(node.child, column_name)})"
    op = "AND" if isinstance(node, And) else "OR"
    return f"({predicate_sql(node.left, column_name)} {op} {predicate_sql(node.right, column_name)})"


def to_sql(ast: QueryAst) -> str:
    cols = "*" if ast.star else ", ".join(quote_ident(c) for c in ast.projections)
    text = f"SELECT {cols} FROM {quote_ident(ast.table)}"
    if ast.predicate is not None:
        text += " WHERE " + predicate_sql(ast.predicate)
    return text
