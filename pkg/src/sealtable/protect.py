"""Build the protected pair: an encrypted main table plus one search table per sensitive column.

A search table row pairs the *plaintext* value of a sensitive column with the
*encrypted* record key.  Rows are shuffled, padded with noise rows whose key
encrypts the sentinel 0, and the two columns carry generated alias names.
"""

from __future__ import annotations

import hashlib
import math
import os
import random
import string
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from . import storage
from .cipher import Cipher, CipherEnvelope, CipherKey, KeyRing, NONCE_SIZE, get_cipher
from .errors import EmptyDomain, FormatError, NonceExhaustion, NoSensitiveColumn, VersionMismatch
from .storage import ColumnSpec, Kind, Record, Table, Value

SENTINEL_KEY = 0
DEFAULT_NOISE = Fraction(1, 20)
ALIAS_LENGTH = 8

MAIN_FILE = "main.sealtable"
SECURE_DIR = "secure"
META_FILE = "meta.sealmeta"
META_MAGIC = "SEALMETA"


def encode_key(key: int) -> bytes:
    return key.to_bytes(8, "big")


def decode_key(raw: bytes) -> int:
    if len(raw) != 8:
        raise ValueError(f"encrypted key has {len(raw)} bytes, expected 8")
    return int.from_bytes(raw, "big")


def encode_value(value: Value) -> bytes:
    return storage.format_value(value).encode("utf-8")


def decode_value(raw: bytes, kind: Kind) -> Value:
    return storage.parse_value(raw.decode("utf-8"), kind)


def as_fraction(value) -> Fraction:
    # str() first so 0.05 means 1/20, not its binary approximation
    if isinstance(value, float):
        value = str(value)
    return Fraction(value)


def _derive_seed(seed: int, *parts: str) -> int:
    digest = hashlib.sha256(":".join([str(seed), *parts]).encode()).digest()
    return int.from_bytes(digest[:8], "big")


class NonceSource:
    """Hands out 12-byte nonces and refuses to repeat one within a protect run."""

    def __init__(self, seed: int | None = None, generate: Callable[[], bytes] | None = None):
        if generate is None:
            if seed is None:
                generate = lambda: os.urandom(NONCE_SIZE)
            else:
                rng = random.Random(seed)
                generate = lambda: rng.getrandbits(8 * NONCE_SIZE).to_bytes(NONCE_SIZE, "big")
        self._generate = generate
        self._issued: set[bytes] = set()

    def __call__(self) -> bytes:
        nonce = self._generate()
        if nonce in self._issued:
            raise NonceExhaustion(f"nonce {nonce.hex()} issued twice")
        self._issued.add(nonce)
        return nonce

    def __len__(self):
        return len(self._issued)


@dataclass(frozen=True)
class SearchRow:
    enc_key: CipherEnvelope
    search_value: Value


@dataclass(eq=False)
class SearchTable:
    table_id: str
    alias_key_column: str
    alias_value_column: str
    value_kind: Kind
    rows: tuple = ()
    reads: int = field(default=0, compare=False)

    def scan(self) -> Iterator[SearchRow]:
        """Iterate the rows.  ``reads`` counts scans, for access auditing."""
        self.reads += 1
        return iter(self.rows)

    @property
    def schema(self) -> list[ColumnSpec]:
        return [
            ColumnSpec(self.alias_key_column, Kind.INTEGER, True),
            ColumnSpec(self.alias_value_column, self.value_kind, False),
        ]

    def __len__(self):
        return len(self.rows)

    def __eq__(self, other):
        if not isinstance(other, SearchTable):
            return NotImplemented
        return (self.table_id, self.alias_key_column, self.alias_value_column, self.value_kind, self.rows) == (
            other.table_id, other.alias_key_column, other.alias_value_column, other.value_kind, other.rows)


@dataclass(frozen=True)
class SearchEntry:
    column: str
    table_id: str
    alias_key_column: str
    alias_value_column: str


@dataclass
class SecureMetadata:
    table_name: str
    cipher_name: str
    noise_fraction: Fraction
    shuffle_seed: int
    noise_seed: int
    principals: frozenset = frozenset()
    aliases: dict = field(default_factory=dict)
    secure_schema: str = SECURE_DIR

    def entry(self, column: str) -> SearchEntry:
        return self.aliases[column]


@dataclass
class ProtectConfig:
    noise_fraction: Fraction = DEFAULT_NOISE
    shuffle_seed: int = 0
    noise_seed: int = 0
    principals: frozenset = frozenset()
    secure_schema: str = SECURE_DIR
    nonce_seed: int | None = None
    nonce_generator: Callable[[], bytes] | None = None

    def __post_init__(self):
        self.noise_fraction = as_fraction(self.noise_fraction)
        if not 0 <= self.noise_fraction < 1:
            raise ValueError("noise_fraction must lie in [0, 1)")
        self.principals = frozenset(self.principals)


@dataclass
class ProtectedPair:
    main: Table
    search_tables: Mapping[str, SearchTable]
    meta: SecureMetadata


def alias_columns(seed: int, column: str, avoid: Iterable[str] = ()) -> tuple[str, str]:
    """Deterministic pair of distinct 8-letter uppercase aliases for ``column``.

    Names in ``avoid`` (compared case-insensitively) are never produced.
    """
    taken = {name.upper() for name in avoid}
    names = []
    attempt = 0
    while len(names) < 2:
        digest = hashlib.sha256(f"{seed}:{column}:{len(names)}:{attempt}".encode()).digest()
        name = "".join(string.ascii_uppercase[b % 26] for b in digest[:ALIAS_LENGTH])
        attempt += 1
        if name in taken:
            continue
        taken.add(name)
        names.append(name)
    return names[0], names[1]


def add_noise(
    real_values: Sequence[Value],
    count: int,
    noise_seed: int,
    search_key: CipherKey,
    *,
    cipher: Cipher,
    nonces: Callable[[], bytes],
) -> list[SearchRow]:
    """``count`` decoy rows: values drawn from ``real_values``, keys encrypting the sentinel."""
    if count < 0:
        raise ValueError("noise count must be non-negative")
    if count and not real_values:
        raise EmptyDomain("cannot sample noise values from an empty column")
    rng = random.Random(noise_seed)
    sentinel = encode_key(SENTINEL_KEY)
    return [
        SearchRow(cipher.encrypt(sentinel, search_key, nonces()), rng.choice(real_values))
        for _ in range(count)
    ]


def noise_count(n_real: int, noise_fraction) -> int:
    return math.ceil(as_fraction(noise_fraction) * n_real)


def build_search_table(
    column_values: Sequence[tuple[int, Value]],
    search_key: CipherKey,
    config: ProtectConfig,
    *,
    column: str,
    kind: Kind,
    cipher: Cipher,
    nonces: Callable[[], bytes] | None = None,
    avoid: Iterable[str] = (),
) -> SearchTable:
    if nonces is None:
        nonces = NonceSource(config.nonce_seed, config.nonce_generator)
    rows = []
    for key, value in column_values:
        if key < 1:
            raise ValueError(f"record key {key} is reserved")
        rows.append(SearchRow(cipher.encrypt(encode_key(key), search_key, nonces()), value))
    values = [value for _, value in column_values]
    rows += add_noise(
        values,
        noise_count(len(values), config.noise_fraction),
        _derive_seed(config.noise_seed, column),
        search_key,
        cipher=cipher,
        nonces=nonces,
    )
    random.Random(_derive_seed(config.shuffle_seed, column)).shuffle(rows)
    alias_key, alias_value = alias_columns(config.shuffle_seed, column, avoid)
    table_id = "QST_" + hashlib.sha256(f"{config.shuffle_seed}:{column}:table".encode()).hexdigest()[:12]
    return SearchTable(table_id, alias_key, alias_value, kind, tuple(rows))


def protect(
    table: Table,
    keys: KeyRing,
    config: ProtectConfig | None = None,
    cipher: Cipher | None = None,
) -> ProtectedPair:
    config = config or ProtectConfig()
    cipher = cipher or get_cipher("aesgcm")
    sensitive = [i for i, c in enumerate(table.schema) if c.sensitive]
    if not sensitive:
        raise NoSensitiveColumn("table has no sensitive column to protect")
    nonces = NonceSource(config.nonce_seed, config.nonce_generator)

    encrypted_rows = []
    for record in table.rows:
        values = list(record.values)
        for i in sensitive:
            values[i] = cipher.encrypt(encode_value(values[i]), keys.main, nonces())
        encrypted_rows.append(Record(record.key, tuple(values)))
    main = Table(table.schema, encrypted_rows, name=table.name)

    taken = set(table.column_names)
    search_tables = {}
    aliases = {}
    for i in sensitive:
        spec = table.schema[i]
        search = build_search_table(
            [(r.key, r.values[i]) for r in table.rows],
            keys.search,
            config,
            column=spec.name,
            kind=spec.kind,
            cipher=cipher,
            nonces=nonces,
            avoid=taken,
        )
        taken.update((search.alias_key_column, search.alias_value_column))
        search_tables[spec.name] = search
        aliases[spec.name] = SearchEntry(spec.name, search.table_id, search.alias_key_column, search.alias_value_column)

    meta = SecureMetadata(
        table_name=table.name or "main",
        cipher_name=cipher.name,
        noise_fraction=config.noise_fraction,
        shuffle_seed=config.shuffle_seed,
        noise_seed=config.noise_seed,
        principals=config.principals,
        aliases=aliases,
        secure_schema=config.secure_schema,
    )
    return ProtectedPair(main, search_tables, meta)


# persistence

def save_search_table(search: SearchTable, sink) -> None:
    storage.write_sealtable(search.schema, ((r.enc_key, r.search_value) for r in search.rows), sink)


def load_search_table(source, entry: SearchEntry) -> SearchTable:
    schema, rows = storage.read_sealtable(source)
    if len(schema) != 2 or [c.name for c in schema] != [entry.alias_key_column, entry.alias_value_column]:
        raise FormatError(0, f"search table columns {[c.name for c in schema]} do not match metadata")
    out = []
    for enc_key, value in rows:
        if not isinstance(enc_key, CipherEnvelope) or isinstance(value, CipherEnvelope):
            raise FormatError(0, "search row must pair an encrypted key with a plaintext value")
        out.append(SearchRow(enc_key, value))
    return SearchTable(entry.table_id, entry.alias_key_column, entry.alias_value_column, schema[1].kind, tuple(out))


def save_metadata(meta: SecureMetadata, sink) -> None:
    lines = [
        f"{META_MAGIC} v1",
        f"table\t{storage.escape_text(meta.table_name)}",
        f"secure_schema\t{storage.escape_text(meta.secure_schema)}",
        f"cipher\t{meta.cipher_name}",
        f"noise_fraction\t{meta.noise_fraction}",
        f"shuffle_seed\t{meta.shuffle_seed}",
        f"noise_seed\t{meta.noise_seed}",
    ]
    lines += [f"principal\t{storage.escape_text(p)}" for p in sorted(meta.principals)]
    for e in meta.aliases.values():
        lines.append("\t".join(["alias", storage.escape_text(e.column), e.table_id, e.alias_key_column, e.alias_value_column]))
    sink.write(("\n".join(lines) + "\n").encode("utf-8"))


def load_metadata(source) -> SecureMetadata:
    data = source.read()
    if not data.endswith(b"\n"):
        raise FormatError(len(data), "truncated metadata file")
    lines = data.decode("utf-8").split("\n")[:-1]
    magic, _, version = lines[0].partition(" ")
    if magic != META_MAGIC:
        raise FormatError(0, f"not a {META_MAGIC} file")
    if version != "v1":
        raise VersionMismatch(f"unsupported {META_MAGIC} version {version!r}")
    scalars: dict[str, str] = {}
    principals = set()
    aliases = {}
    offset = len(lines[0]) + 1
    for line in lines[1:]:
        fields = line.split("\t")
        tag = fields[0]
        if tag == "principal" and len(fields) == 2:
            principals.add(storage.unescape_text(fields[1]))
        elif tag == "alias" and len(fields) == 5:
            column = storage.unescape_text(fields[1])
            aliases[column] = SearchEntry(column, *fields[2:])
        elif len(fields) == 2 and tag in {"table", "secure_schema", "cipher", "noise_fraction", "shuffle_seed", "noise_seed"}:
            scalars[tag] = fields[1]
        else:
            raise FormatError(offset, f"unrecognised metadata line {line!r}")
        offset += len(line.encode("utf-8")) + 1
    try:
        return SecureMetadata(
            table_name=storage.unescape_text(scalars["table"]),
            cipher_name=scalars["cipher"],
            noise_fraction=Fraction(scalars["noise_fraction"]),
            shuffle_seed=int(scalars["shuffle_seed"]),
            noise_seed=int(scalars["noise_seed"]),
            principals=frozenset(principals),
            aliases=aliases,
            secure_schema=storage.unescape_text(scalars["secure_schema"]),
        )
    except (KeyError, ValueError) as exc:
        raise FormatError(len(data), f"incomplete metadata: {exc}") from None


class LazySearchTables(Mapping):
    """Loads a search table file only when it is first looked up."""

    def __init__(self, directory: Path, meta: SecureMetadata):
        self._directory = directory
        self._meta = meta
        self._loaded: dict[str, SearchTable] = {}
        self.files_opened = 0

    def __getitem__(self, column: str) -> SearchTable:
        if column not in self._loaded:
            entry = self._meta.aliases[column]
            self.files_opened += 1
            with open(self._directory / f"{entry.table_id}.sealtable", "rb") as fh:
                self._loaded[column] = load_search_table(fh, entry)
        return self._loaded[column]

    def __iter__(self):
        return iter(self._meta.aliases)

    def __len__(self):
        return len(self._meta.aliases)


def _write_private(path: Path, writer) -> None:
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "wb") as fh:
        writer(fh)
    os.chmod(path, 0o600)


def save_protected(pair: ProtectedPair, directory) -> list[Path]:
    """Write ``main.sealtable`` plus the secure schema directory; return the paths written."""
    directory = Path(directory)
    secure = directory / pair.meta.secure_schema
    secure.mkdir(parents=True, exist_ok=True)
    os.chmod(secure, 0o700)
    written = [directory / MAIN_FILE]
    with open(written[0], "wb") as fh:
        storage.save(pair.main, fh)
    for column, search in pair.search_tables.items():
        path = secure / f"{search.table_id}.sealtable"
        _write_private(path, lambda fh, s=search: save_search_table(s, fh))
        written.append(path)
    meta_path = secure / META_FILE
    _write_private(meta_path, lambda fh: save_metadata(pair.meta, fh))
    written.append(meta_path)
    return written


def load_protected(directory, secure_schema: str = SECURE_DIR) -> ProtectedPair:
    """Load a protected set.  Search tables stay on disk until first accessed."""
    directory = Path(directory)
    with open(directory / secure_schema / META_FILE, "rb") as fh:
        meta = load_metadata(fh)
    with open(directory / MAIN_FILE, "rb") as fh:
        main = storage.load(fh, name=meta.table_name)
    return ProtectedPair(main, LazySearchTables(directory / secure_schema, meta), meta)
