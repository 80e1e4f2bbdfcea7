"""Two-phase selective decryption, plus the full-column-decryption baseline.

A rewritten plan runs in two phases.  The inner phase probes search tables
on their plaintext value column and decrypts only the matching record keys.
The outer phase fetches those records from the main table by key and
decrypts only the sensitive fields being projected.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .cipher import Cipher, CipherEnvelope, CipherKey, DecryptionCounter, KeyRing, get_cipher
from .errors import Unauthorized
from .protect import SENTINEL_KEY, ProtectedPair, SearchTable, decode_key, decode_value
from .query.like import match_like
from .query.nodes import And, Between, Comparison, Like, Or, Predicate, QueryAst, atoms
from .query.planner import Direct, KeyAnd, KeyNode, PlainFilter, Probe, QueryPlan, resolve
from .storage import Table

UNSUCCESSFUL = "Search is unsuccessful"

_OPS: dict[str, Callable] = {
    "=": lambda a, b: a == b,
    "<>": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


@dataclass(frozen=True)
class AuthContext:
    user: str
    granted: frozenset = frozenset()

    @classmethod
    def for_user(cls, user: str, meta) -> "AuthContext":
        """Grant the secure schema iff ``user`` is on the metadata's principal list."""
        return cls(user, frozenset({meta.secure_schema}) if user in meta.principals else frozenset())


@dataclass
class ExecStats:
    keys_probed: int = 0
    keys_matched: int = 0
    noise_filtered: int = 0
    decrypt_calls_inner: int = 0
    decrypt_calls_outer: int = 0
    elapsed: float = 0.0

    @property
    def decrypt_calls(self) -> int:
        return self.decrypt_calls_inner + self.decrypt_calls_outer

    def trailer(self) -> str:
        return (
            f"# stats keys_probed={self.keys_probed} keys_matched={self.keys_matched} "
            f"noise_filtered={self.noise_filtered} decrypt_calls_inner={self.decrypt_calls_inner} "
            f"decrypt_calls_outer={self.decrypt_calls_outer} elapsed_us={self.elapsed * 1e6:.1f}"
        )


@dataclass
class ResultSet:
    columns: list
    rows: list
    stats: ExecStats = field(default_factory=ExecStats)

    @property
    def unsuccessful(self) -> bool:
        return not self.rows

    @property
    def status(self) -> str:
        return UNSUCCESSFUL if self.unsuccessful else "ok"


def evaluate(node: Predicate, value_of: Callable[[str], object]) -> bool:
    """Evaluate a predicate; ``value_of`` maps a column name to its plaintext value."""
    if isinstance(node, (Comparison, Between, Like)):
        return atom_matcher(node)(value_of(node.column))
    if isinstance(node, And):
        return evaluate(node.left, value_of) and evaluate(node.right, value_of)
    if isinstance(node, Or):
        return evaluate(node.left, value_of) or evaluate(node.right, value_of)
    return not evaluate(node.child, value_of)


def compile_predicate(node: Predicate, index_of: Callable[[str], int]) -> Callable[[tuple], bool]:
    """Turn a predicate into a test over row tuples laid out per ``index_of``."""
    if isinstance(node, (Comparison, Between, Like)):
        test, i = atom_matcher(node), index_of(node.column)
        return lambda row: test(row[i])
    if isinstance(node, (And, Or)):
        left, right = compile_predicate(node.left, index_of), compile_predicate(node.right, index_of)
        if isinstance(node, And):
            return lambda row: left(row) and right(row)
        return lambda row: left(row) or right(row)
    child = compile_predicate(node.child, index_of)
    return lambda row: not child(row)


def atom_matcher(atom) -> Callable[[object], bool]:
    """Single-column test for a search-table probe."""
    if isinstance(atom, Comparison):
        op, literal = _OPS[atom.op], atom.literal
        return lambda v: op(v, literal)
    if isinstance(atom, Between):
        lo, hi = atom.lo, atom.hi
        return lambda v: lo <= v <= hi
    pattern = atom.pattern
    return lambda v: match_like(v, pattern)


def _projection(ast: QueryAst, table: Table) -> list[str]:
    return table.column_names if ast.star else list(ast.projections)


def probe_search_table(
    atom,
    search: SearchTable,
    search_key: CipherKey,
    counter: DecryptionCounter,
    *,
    cipher: Cipher,
    valid_keys: Iterable[int] | None = None,
    stats: ExecStats | None = None,
) -> frozenset:
    """Keys of real records whose search value satisfies ``atom``.

    Only matching rows have their key decrypted.  Sentinel keys and keys not in
    ``valid_keys`` (when given) are dropped.
    """
    test = atom_matcher(atom)
    keys = set()
    dropped = scanned = 0
    before = counter.count
    for row in search.scan():
        scanned += 1
        if not test(row.search_value):
            continue
        key = decode_key(cipher.decrypt(row.enc_key, search_key, counter))
        if key == SENTINEL_KEY or (valid_keys is not None and key not in valid_keys):
            dropped += 1
        else:
            keys.add(key)
    if stats is not None:
        stats.keys_probed += scanned
        stats.noise_filtered += dropped
        stats.decrypt_calls_inner += counter.count - before
    return frozenset(keys)


def _authorize(auth: AuthContext, pair: ProtectedPair) -> None:
    if pair.meta.secure_schema not in auth.granted:
        raise Unauthorized(f"user {auth.user!r} may not access secure schema {pair.meta.secure_schema!r}")


def _fetch(
    keys: Iterable[int],
    table: Table,
    columns: list[str],
    residual: Predicate | None,
    main_key: CipherKey,
    cipher: Cipher,
    counter: DecryptionCounter,
) -> list[tuple]:
    positions = [table.column_index(c) for c in columns]
    kinds = [table.schema[p].kind for p in positions]
    keep = None if residual is None else compile_predicate(residual, table.column_index)
    rows = []
    for key in sorted(keys):
        record = table.lookup(key)
        if record is None:
            continue
        if keep is not None and not keep(record.values):
            continue
        out = []
        for pos, kind in zip(positions, kinds):
            value = record.values[pos]
            if isinstance(value, CipherEnvelope):
                value = decode_value(cipher.decrypt(value, main_key, counter), kind)
            out.append(value)
        rows.append(tuple(out))
    return rows


def execute(
    plan: QueryPlan,
    pair: ProtectedPair,
    auth: AuthContext,
    keys: KeyRing,
    counter: DecryptionCounter | None = None,
    cipher: Cipher | None = None,
) -> ResultSet:
    """Run a plan.  An empty result is a successful :class:`ResultSet` with ``unsuccessful`` set."""
    counter = counter if counter is not None else DecryptionCounter("execute")
    cipher = cipher or get_cipher(pair.meta.cipher_name)
    main = pair.main
    stats = ExecStats()
    start = time.perf_counter()
    columns = _projection(plan.ast, main)

    if isinstance(plan, Direct):
        predicate = plan.ast.predicate
        if predicate is None:
            matched = list(main.keys())
        else:
            test = compile_predicate(predicate, main.column_index)
            matched = [r.key for r in main.rows if test(r.values)]
        stats.keys_matched = len(matched)
        before = counter.count
        rows = _fetch(matched, main, columns, None, keys.main, cipher, counter)
        stats.decrypt_calls_outer = counter.count - before
    else:
        _authorize(auth, pair)
        valid = main.keys()

        def key_set(node: KeyNode) -> frozenset:
            if isinstance(node, Probe):
                return probe_search_table(
                    node.atom, pair.search_tables[node.column], keys.search, counter,
                    cipher=cipher, valid_keys=valid, stats=stats,
                )
            if isinstance(node, PlainFilter):
                test = compile_predicate(node.predicate, main.column_index)
                return frozenset(r.key for r in main.rows if test(r.values))
            left = key_set(node.left)
            if isinstance(node, KeyAnd):
                return left & key_set(node.right) if left else left
            return left | key_set(node.right)

        matched = key_set(plan.key_tree)
        stats.keys_matched = len(matched)
        before = counter.count
        rows = _fetch(matched, main, columns, plan.residual, keys.main, cipher, counter)
        stats.decrypt_calls_outer = counter.count - before

    stats.elapsed = time.perf_counter() - start
    return ResultSet(columns, rows, stats)


def baseline_full_decrypt(
    ast: QueryAst,
    pair: ProtectedPair,
    main_key: CipherKey,
    counter: DecryptionCounter | None = None,
    cipher: Cipher | None = None,
) -> ResultSet:
    """Decrypt every value of each referenced sensitive column, then filter in plaintext.

    Referenced means named in the WHERE clause or the projection.
    """
    counter = counter if counter is not None else DecryptionCounter("baseline")
    cipher = cipher or get_cipher(pair.meta.cipher_name)
    main = pair.main
    stats = ExecStats()
    start = time.perf_counter()
    ast = resolve(ast, pair.meta, main.schema)
    columns = _projection(ast, main)
    referenced = {a.column for a in atoms(ast.predicate)} | set(columns)
    decrypt_cols = [i for i, c in enumerate(main.schema) if c.sensitive and c.name in referenced]

    before = counter.count
    plain = {}
    for i in decrypt_cols:
        kind = main.schema[i].kind
        plain[i] = [decode_value(cipher.decrypt(r.values[i], main_key, counter), kind) for r in main.rows]
    stats.decrypt_calls_inner = counter.count - before

    test = None if ast.predicate is None else compile_predicate(ast.predicate, main.column_index)
    positions = [main.column_index(c) for c in columns]
    matched = []
    for pos, record in enumerate(main.rows):
        row = list(record.values)
        for i, values in plain.items():
            row[i] = values[pos]
        if test is None or test(row):
            matched.append((record.key, tuple(row[p] for p in positions)))
    matched.sort(key=lambda item: item[0])
    stats.keys_probed = len(main)
    stats.keys_matched = len(matched)
    stats.elapsed = time.perf_counter() - start
    return ResultSet(columns, [row for _, row in matched], stats)
