"""Record tables: CSV ingestion, key-indexed lookup and the ``SEALTABLE v1`` file format.

File layout (UTF-8, every line newline-terminated)::

    SEALTABLE v1
    Key:integer:0<TAB>Emp_Name:text:0<TAB>Salary:integer:1
    1<TAB>Rajesh<TAB>enc:<24 hex nonce><body hex>
    ...
    END<TAB><row count>

Text fields escape backslash, tab, newline and carriage return.  A text value
that itself starts with ``enc:`` is written with a leading ``\\e`` so it can
never be mistaken for an envelope.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import BinaryIO, Iterable, Iterator, Sequence, TextIO, Union

from .cipher import CipherEnvelope
from .errors import (
    DuplicateKey,
    FormatError,
    NullSensitiveValue,
    ParseError,
    SchemaMismatch,
    VersionMismatch,
)

MAGIC = "SEALTABLE"
VERSION = "v1"
MAX_KEY = 2**64 - 1

Value = Union[int, Decimal, str, CipherEnvelope]


class Kind(str, enum.Enum):
    INTEGER = "integer"
    DECIMAL = "decimal"
    TEXT = "text"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: Kind
    sensitive: bool = False

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))

    def spec(self) -> str:
        return f"{self.name}:{self.kind}:{int(self.sensitive)}"


@dataclass(frozen=True)
class Record:
    key: int
    values: tuple


_TRUE = {"1", "true", "yes", "y", "t"}
_FALSE = {"0", "false", "no", "n", "f", ""}


def parse_column_spec(text: str) -> ColumnSpec:
    parts = text.strip().split(":")
    if len(parts) == 2:
        parts.append("0")
    if len(parts) != 3 or not parts[0]:
        raise SchemaMismatch(f"bad column spec {text!r}; expected name:kind:sensitive")
    name, kind, flag = parts
    try:
        kind = Kind(kind.lower())
    except ValueError:
        raise SchemaMismatch(f"unknown column kind {kind!r}") from None
    flag = flag.lower()
    if flag not in _TRUE | _FALSE:
        raise SchemaMismatch(f"bad sensitive flag {flag!r}")
    return ColumnSpec(name, kind, flag in _TRUE)


def parse_schema_spec(text: str) -> list[ColumnSpec]:
    """Parse ``name:kind:sensitive,...`` into column specs."""
    return [parse_column_spec(part) for part in text.split(",") if part.strip()]


def validate_schema(schema: Sequence[ColumnSpec]) -> None:
    """The first column is the record key: integer and not sensitive."""
    if not schema:
        raise SchemaMismatch("schema has no columns")
    names = [c.name for c in schema]
    if len(set(names)) != len(names):
        raise SchemaMismatch(f"duplicate column names in {names}")
    key = schema[0]
    if key.kind is not Kind.INTEGER or key.sensitive:
        raise SchemaMismatch(f"key column {key.name!r} must be a non-sensitive integer")


def canonical_decimal(text: str) -> Decimal:
    """Exact decimal in canonical form: no exponent, no trailing fractional zeros."""
    value = Decimal(text.strip())
    if not value.is_finite():
        raise InvalidOperation(text)
    value = value.normalize()
    if value.as_tuple().exponent > 0:
        value = value.quantize(Decimal(1))
    if value == 0:
        value = Decimal(0)
    return value


def parse_value(text: str, kind: Kind) -> Value:
    if kind is Kind.TEXT:
        return text
    if kind is Kind.INTEGER:
        return int(text.strip(), 10)
    return canonical_decimal(text)


def format_value(value: Value) -> str:
    if isinstance(value, CipherEnvelope):
        return "enc:" + value.hex()
    if isinstance(value, Decimal):
        return format(value, "f")
    return str(value)


class Table:
    """Immutable table whose first column is the unique record key."""

    def __init__(self, schema: Sequence[ColumnSpec], rows: Iterable[Record] = (), name: str | None = None):
        self.schema = tuple(schema)
        validate_schema(self.schema)
        self.name = name
        self.rows = tuple(rows)
        self._positions = {name: i for i, name in enumerate(c.name for c in self.schema)}
        self._index: dict[int, int] = {}
        width = len(self.schema)
        for pos, record in enumerate(self.rows):
            if len(record.values) != width:
                raise SchemaMismatch(f"record {record.key} has {len(record.values)} fields, schema has {width}")
            if not 1 <= record.key <= MAX_KEY or record.values[0] != record.key:
                raise SchemaMismatch(f"invalid record key {record.key!r}")
            if record.key in self._index:
                raise DuplicateKey(record.key)
            for spec, value in zip(self.schema, record.values):
                if isinstance(value, CipherEnvelope) and not spec.sensitive:
                    raise SchemaMismatch(f"encrypted value in non-sensitive column {spec.name!r}")
            self._index[record.key] = pos

    @property
    def key_column(self) -> ColumnSpec:
        return self.schema[0]

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.schema]

    def column_index(self, name: str) -> int:
        return self._positions[name]

    def column(self, name: str) -> ColumnSpec:
        return self.schema[self._positions[name]]

    def lookup(self, key: int) -> Record | None:
        pos = self._index.get(key)
        return None if pos is None else self.rows[pos]

    def keys(self):
        return self._index.keys()

    def __contains__(self, key) -> bool:
        return key in self._index

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[Record]:
        return iter(self.rows)

    def __eq__(self, other):
        if not isinstance(other, Table):
            return NotImplemented
        return self.schema == other.schema and self.rows == other.rows

    def __repr__(self):
        return f"Table(name={self.name!r}, columns={self.column_names}, rows={len(self.rows)})"


def lookup_by_key(table: Table, key: int) -> Record | None:
    return table.lookup(key)


def ingest_csv(source: TextIO, schema: Sequence[ColumnSpec], name: str | None = None) -> Table:
    """Read a headed CSV whose columns match ``schema`` exactly, in order."""
    schema = list(schema)
    validate_schema(schema)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaMismatch("CSV has no header line") from None
    except csv.Error as exc:
        raise ParseError(1, str(exc)) from None
    expected = [c.name for c in schema]
    if [h.strip() for h in header] != expected:
        raise SchemaMismatch(f"CSV header {header} does not match schema {expected}")

    records = []
    seen = set()
    try:
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(schema):
                raise ParseError(line, f"expected {len(schema)} fields, found {len(row)}")
            values = []
            for spec, cell in zip(schema, row):
                if spec.sensitive and cell.strip() == "":
                    raise NullSensitiveValue(spec.name, line)
                try:
                    values.append(parse_value(cell, spec.kind))
                except (ValueError, InvalidOperation):
                    raise ParseError(line, f"cannot read {cell!r} as {spec.kind} for column {spec.name!r}") from None
            key = values[0]
            if not 1 <= key <= MAX_KEY:
                raise ParseError(line, f"key {key} outside 1..2^64-1")
            if key in seen:
                raise DuplicateKey(key)
            seen.add(key)
            records.append(Record(key, tuple(values)))
    except csv.Error as exc:
        raise ParseError(reader.line_num, str(exc)) from None
    return Table(schema, records, name=name)


# SEALTABLE v1 encoding

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r", "e": "e"}


def escape_text(text: str) -> str:
    out = "".join(_ESCAPES.get(ch, ch) for ch in text)
    if out.startswith("enc:"):
        out = "\\e" + out[1:]
    return out


def unescape_text(text: str) -> str:
    if "\\" not in text:
        return text
    out = []
    chars = iter(text)
    for ch in chars:
        if ch != "\\":
            out.append(ch)
            continue
        nxt = next(chars, None)
        if nxt not in _UNESCAPES:
            raise ValueError(f"bad escape sequence \\{nxt or ''}")
        out.append(_UNESCAPES[nxt])
    return "".join(out)


def _encode_field(value: Value, spec: ColumnSpec) -> str:
    if isinstance(value, CipherEnvelope):
        return "enc:" + value.hex()
    if spec.kind is Kind.TEXT:
        return escape_text(value)
    return format_value(value)


def _decode_field(text: str, spec: ColumnSpec) -> Value:
    if text.startswith("enc:"):
        if not spec.sensitive:
            raise ValueError(f"encrypted value in non-sensitive column {spec.name!r}")
        return CipherEnvelope.from_hex(text[4:])
    if spec.kind is Kind.TEXT:
        return unescape_text(text)
    return parse_value(text, spec.kind)


def write_sealtable(schema: Sequence[ColumnSpec], rows: Iterable[Sequence[Value]], sink: BinaryIO) -> None:
    lines = [f"{MAGIC} {VERSION}", "\t".join(c.spec() for c in schema)]
    count = 0
    for row in rows:
        lines.append("\t".join(_encode_field(v, c) for v, c in zip(row, schema)))
        count += 1
    lines.append(f"END\t{count}")
    sink.write(("\n".join(lines) + "\n").encode("utf-8"))


def read_sealtable(source: BinaryIO) -> tuple[list[ColumnSpec], list[tuple]]:
    """Parse a ``SEALTABLE`` stream into its schema and raw field tuples."""
    data = source.read()
    if not data.endswith(b"\n"):
        raise FormatError(len(data), "truncated file (missing final newline)")
    offsets = []
    lines = []
    start = 0
    for raw in data.split(b"\n")[:-1]:
        offsets.append(start)
        try:
            lines.append(raw.decode("utf-8"))
        except UnicodeDecodeError:
            raise FormatError(start, "invalid UTF-8") from None
        start += len(raw) + 1

    header = lines[0]
    magic, _, version = header.partition(" ")
    if magic != MAGIC:
        raise FormatError(0, f"not a {MAGIC} file")
    if version != VERSION:
        raise VersionMismatch(f"unsupported {MAGIC} version {version!r}")
    if len(lines) < 3:
        raise FormatError(len(data), "truncated file (missing schema or END line)")

    try:
        schema = [parse_column_spec(part) for part in lines[1].split("\t")]
    except SchemaMismatch as exc:
        raise FormatError(offsets[1], str(exc)) from None

    trailer = lines[-1].split("\t")
    if len(trailer) != 2 or trailer[0] != "END" or not trailer[1].isdigit():
        raise FormatError(offsets[-1], "truncated file (missing END line)")
    body = lines[2:-1]
    if int(trailer[1]) != len(body):
        raise FormatError(offsets[-1], f"END declares {trailer[1]} rows, found {len(body)}")

    rows = []
    for offset, line in zip(offsets[2:], body):
        fields = line.split("\t")
        if len(fields) != len(schema):
            raise FormatError(offset, f"expected {len(schema)} fields, found {len(fields)}")
        try:
            rows.append(tuple(_decode_field(f, c) for f, c in zip(fields, schema)))
        except (ValueError, InvalidOperation) as exc:
            raise FormatError(offset, str(exc)) from None
    return schema, rows


def read_schema(source: BinaryIO) -> list[ColumnSpec]:
    """Read only the header and schema line of a ``SEALTABLE`` stream."""
    header = source.readline().decode("utf-8", "replace").rstrip("\n")
    magic, _, version = header.partition(" ")
    if magic != MAGIC:
        raise FormatError(0, f"not a {MAGIC} file")
    if version != VERSION:
        raise VersionMismatch(f"unsupported {MAGIC} version {version!r}")
    line = source.readline().decode("utf-8", "replace")
    if not line.endswith("\n"):
        raise FormatError(len(header) + 1, "truncated file (missing schema line)")
    try:
        return [parse_column_spec(part) for part in line.rstrip("\n").split("\t")]
    except SchemaMismatch as exc:
        raise FormatError(len(header) + 1, str(exc)) from None


def save(table: Table, sink: BinaryIO) -> None:
    write_sealtable(table.schema, (r.values for r in table.rows), sink)


def load(source: BinaryIO, name: str | None = None) -> Table:
    schema, rows = read_sealtable(source)
    try:
        return Table(schema, (Record(r[0], r) for r in rows), name=name)
    except SchemaMismatch as exc:
        raise FormatError(0, str(exc)) from None
