"""Independent reference pieces for the test suite.

Nothing here imports the code under test's evaluation path: the LIKE oracle
is a recursive brute-force matcher and the query evaluator works directly on
the plaintext table.
"""

import re
from decimal import Decimal

from sealtable.query.nodes import And, Between, Comparison, Like, Not, Or, QueryAst
from sealtable.storage import ColumnSpec, Kind, Record, Table


def like_bruteforce(value, pattern):
    if not pattern:
        return not value
    head, rest = pattern[0], pattern[1:]
    if head == "%":
        return any(like_bruteforce(value[i:], rest) for i in range(len(value) + 1))
    if not value:
        return False
    return (head == "_" or head == value[0]) and like_bruteforce(value[1:], rest)


def like_regex(value, pattern):
    body = "".join(".*" if ch == "%" else "." if ch == "_" else re.escape(ch) for ch in pattern)
    return re.fullmatch(body, value, flags=re.DOTALL) is not None


def brute_force(table, ast):
    """Rows of the plaintext ``table`` selected by ``ast``, in key order."""
    names = [c.name for c in table.schema]
    lower = {n.lower(): n for n in names}

    def get(row, column):
        return row[names.index(lower[column.lower()])]

    def holds(node, row):
        if isinstance(node, Comparison):
            v, lit = get(row, node.column), node.literal
            return {
                "=": v == lit, "<>": v != lit, "<": v < lit,
                "<=": v <= lit, ">": v > lit, ">=": v >= lit,
            }[node.op]
        if isinstance(node, Between):
            v = get(row, node.column)
            return node.lo <= v and v <= node.hi
        if isinstance(node, Like):
            return like_regex(get(row, node.column), node.pattern)
        if isinstance(node, And):
            return holds(node.left, row) and holds(node.right, row)
        if isinstance(node, Or):
            return holds(node.left, row) or holds(node.right, row)
        return not holds(node.child, row)

    cols = names if ast.projections == ("*",) else [lower[c.lower()] for c in ast.projections]
    out = []
    for record in sorted(table.rows, key=lambda r: r.key):
        if ast.predicate is None or holds(ast.predicate, record.values):
            out.append(tuple(get(record.values, c) for c in cols))
    return out


# random datasets and queries

WORDS = ["ab", "ba", "abc", "cab", "bb", "a", "b", "", "abba", "caab", "ac", "bca"]

MIXED_SCHEMA = (
    ColumnSpec("Id", Kind.INTEGER),
    ColumnSpec("Salary", Kind.INTEGER, True),
    ColumnSpec("Code", Kind.TEXT, True),
    ColumnSpec("Rate", Kind.DECIMAL, True),
    ColumnSpec("Dept", Kind.INTEGER),
    ColumnSpec("Name", Kind.TEXT),
)


def random_table(rng, max_rows=2000, name="T"):
    n = rng.randint(0, max_rows)
    keys = rng.sample(range(1, 10 * max_rows + 1), n)
    rows = []
    for key in keys:
        rows.append(Record(key, (
            key,
            rng.randint(-50, 50),
            rng.choice(WORDS[:-5]) + rng.choice(WORDS),
            Decimal(rng.randint(-200, 200)) / 4,
            rng.randint(0, 9),
            rng.choice(WORDS) or "x",
        )))
    return Table(MIXED_SCHEMA, rows, name=name)


def random_literal(rng, kind):
    if kind is Kind.INTEGER:
        return rng.randint(-55, 55)
    if kind is Kind.DECIMAL:
        return Decimal(rng.randint(-220, 220)) / 4
    return rng.choice(WORDS)


def random_pattern(rng):
    return "".join(rng.choice("ab%_c") for _ in range(rng.randint(0, 4)))


def random_atom(rng, spec, ops=("=", "<>", "<", "<=", ">", ">=", "between", "like")):
    choices = [op for op in ops if op != "like" or spec.kind is Kind.TEXT]
    op = rng.choice(choices)
    if op == "between":
        a, b = sorted([random_literal(rng, spec.kind), random_literal(rng, spec.kind)])
        return Between(spec.name, a, b)
    if op == "like":
        return Like(spec.name, random_pattern(rng))
    return Comparison(spec.name, op, random_literal(rng, spec.kind))


def random_predicate(rng, schema, depth=0, encrypted_ok=True):
    cols = [c for c in schema[1:] if encrypted_ok or not c.sensitive]
    roll = rng.random()
    if depth >= 2 or roll < 0.45:
        return random_atom(rng, rng.choice(cols))
    if roll < 0.55:
        # negation only over plain columns
        return Not(random_predicate(rng, schema, depth + 1, encrypted_ok=False))
    node = And if roll < 0.8 else Or
    return node(random_predicate(rng, schema, depth + 1, encrypted_ok), random_predicate(rng, schema, depth + 1, encrypted_ok))


def random_query(rng, table, require_encrypted=True):
    schema = table.schema
    while True:
        pred = random_predicate(rng, schema)
        cols = {a.column for a in _atoms(pred)}
        if not require_encrypted or any(table.column(c).sensitive for c in cols):
            break
    if rng.random() < 0.3:
        projections = ("*",)
    else:
        projections = tuple(rng.sample([c.name for c in schema], rng.randint(1, len(schema))))
    return QueryAst(projections, table.name, pred)


def _atoms(node):
    if isinstance(node, (Comparison, Between, Like)):
        yield node
    elif isinstance(node, Not):
        yield from _atoms(node.child)
    else:
        yield from _atoms(node.left)
        yield from _atoms(node.right)
