"""Route predicates on encrypted columns to their search tables.

Top-level conjuncts that mention no sensitive column form the *residual*,
applied to fetched rows.  Every other conjunct becomes a key-set tree:
encrypted atoms become :class:`Probe` leaves, plain sub-expressions become
:class:`PlainFilter` leaves scanned on the main table, AND is intersection
and OR is union.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from decimal import Decimal
from typing import Sequence, Union

from ..errors import TypeMismatch, UnknownColumn, UnknownTable, UnsupportedNegation
from ..protect import SearchEntry, SecureMetadata
from ..storage import ColumnSpec, Kind
from .nodes import (
    ATOMS,
    And,
    Atom,
    Between,
    Comparison,
    Not,
    Predicate,
    QueryAst,
    atoms,
    conjoin,
    conjuncts,
    predicate_sql,
    quote_ident,
)


@dataclass(frozen=True)
class Probe:
    """Scan ``entry``'s search table with ``atom`` (written against the alias value column)."""

    column: str
    atom: Atom
    entry: SearchEntry


@dataclass(frozen=True)
class PlainFilter:
    predicate: Predicate


@dataclass(frozen=True)
class KeyAnd:
    left: "KeyNode"
    right: "KeyNode"


@dataclass(frozen=True)
class KeyOr:
    left: "KeyNode"
    right: "KeyNode"


KeyNode = Union[Probe, PlainFilter, KeyAnd, KeyOr]


@dataclass(frozen=True)
class Classification:
    touches_encrypted: bool
    encrypted_atoms: tuple
    plain_residual: Predicate | None
    key_tree: KeyNode | None


@dataclass(frozen=True)
class Direct:
    ast: QueryAst


@dataclass(frozen=True)
class Rewritten:
    ast: QueryAst
    key_tree: KeyNode
    residual: Predicate | None
    probes: tuple


QueryPlan = Union[Direct, Rewritten]


def _resolve_column(name: str, schema: Sequence[ColumnSpec]) -> ColumnSpec:
    for spec in schema:
        if spec.name == name:
            return spec
    folded = [spec for spec in schema if spec.name.lower() == name.lower()]
    if len(folded) == 1:
        return folded[0]
    raise UnknownColumn(f"unknown column {name!r}")


def _check_literal(spec: ColumnSpec, literal) -> None:
    if spec.kind is Kind.TEXT:
        ok = isinstance(literal, str)
    else:
        ok = isinstance(literal, (int, Decimal)) and not isinstance(literal, bool)
    if not ok:
        raise TypeMismatch(spec.name, literal)


def resolve(ast: QueryAst, meta: SecureMetadata, schema: Sequence[ColumnSpec]) -> QueryAst:
    """Check table, columns and literal types; canonicalise column names."""
    if ast.table != meta.table_name and ast.table.lower() != meta.table_name.lower():
        raise UnknownTable(f"unknown table {ast.table!r}")

    def fix(node):
        if isinstance(node, ATOMS):
            spec = _resolve_column(node.column, schema)
            if isinstance(node, Comparison):
                _check_literal(spec, node.literal)
            elif isinstance(node, Between):
                _check_literal(spec, node.lo)
                _check_literal(spec, node.hi)
            elif spec.kind is not Kind.TEXT:
                raise TypeMismatch(spec.name, node.pattern)
            return replace(node, column=spec.name)
        if isinstance(node, Not):
            return Not(fix(node.child))
        return type(node)(fix(node.left), fix(node.right))

    projections = ast.projections if ast.star else tuple(_resolve_column(c, schema).name for c in ast.projections)
    predicate = None if ast.predicate is None else fix(ast.predicate)
    return QueryAst(projections, meta.table_name, predicate)


def classify(ast: QueryAst, meta: SecureMetadata, schema: Sequence[ColumnSpec]) -> Classification:
    ast = resolve(ast, meta, schema)
    sensitive = {spec.name for spec in schema if spec.sensitive}

    def encrypted(node) -> bool:
        return any(a.column in sensitive for a in atoms(node))

    def to_keys(node) -> KeyNode:
        if not encrypted(node):
            return PlainFilter(node)
        if isinstance(node, ATOMS):
            entry = meta.aliases[node.column]
            return Probe(node.column, replace(node, column=entry.alias_value_column), entry)
        if isinstance(node, Not):
            raise UnsupportedNegation("NOT over a predicate on an encrypted column is not supported")
        combine = KeyAnd if isinstance(node, And) else KeyOr
        return combine(to_keys(node.left), to_keys(node.right))

    if ast.predicate is None:
        return Classification(False, (), None, None)
    enc_atoms = tuple(a for a in atoms(ast.predicate) if a.column in sensitive)
    if not enc_atoms:
        return Classification(False, (), ast.predicate, None)

    residual, keyed = [], []
    for part in conjuncts(ast.predicate):
        (keyed if encrypted(part) else residual).append(part)
    trees = [to_keys(part) for part in keyed]
    tree = trees[0]
    for t in trees[1:]:
        tree = KeyAnd(tree, t)
    return Classification(True, enc_atoms, conjoin(residual), tree)


def _probes(node: KeyNode) -> list[Probe]:
    if isinstance(node, Probe):
        return [node]
    if isinstance(node, PlainFilter):
        return []
    return _probes(node.left) + _probes(node.right)


def rewrite(ast: QueryAst, meta: SecureMetadata, schema: Sequence[ColumnSpec]) -> QueryPlan:
    resolved = resolve(ast, meta, schema)
    result = classify(resolved, meta, schema)
    if not result.touches_encrypted:
        return Direct(resolved)
    return Rewritten(resolved, result.key_tree, result.plain_residual, tuple(_probes(result.key_tree)))


def explain(plan: QueryPlan, schema: Sequence[ColumnSpec]) -> str:
    """Render the plan as SQL in the shape of the key-lookup rewrite."""
    if isinstance(plan, Direct):
        return "DIRECT\n" + str(plan.ast)

    ast = plan.ast
    key = quote_ident(schema[0].name)
    sensitive = {c.name for c in schema if c.sensitive}
    names = [c.name for c in schema] if ast.star else list(ast.projections)
    cols = ", ".join(f"DecryptFunction({quote_ident(n)})" if n in sensitive else quote_ident(n) for n in names)

    def render(node: KeyNode) -> str:
        if isinstance(node, Probe):
            e = node.entry
            return (
                f"{key} IN (SELECT DecryptFunction({e.alias_key_column}) "
                f"FROM {e.table_id} WHERE {predicate_sql(node.atom)})"
            )
        if isinstance(node, PlainFilter):
            return predicate_sql(node.predicate)
        op = "AND" if isinstance(node, KeyAnd) else "OR"
        return f"({render(node.left)} {op} {render(node.right)})"

    where = render(plan.key_tree)
    if plan.residual is not None:
        where += f"\n  AND {predicate_sql(plan.residual)}"
    return f"REWRITTEN\nSELECT {cols}\nFROM {quote_ident(ast.table)}\nWHERE {where}"
