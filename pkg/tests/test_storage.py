import io
import random
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sealtable.cipher import CipherEnvelope
from sealtable.errors import (
    DuplicateKey,
    FormatError,
    NullSensitiveValue,
    ParseError,
    SchemaMismatch,
    VersionMismatch,
)
from sealtable.storage import (
    ColumnSpec,
    Kind,
    Record,
    Table,
    canonical_decimal,
    escape_text,
    ingest_csv,
    load,
    lookup_by_key,
    parse_schema_spec,
    save,
    unescape_text,
)


def roundtrip(table):
    buf = io.BytesIO()
    save(table, buf)
    return load(io.BytesIO(buf.getvalue()))


def test_ingest_table1(table1):
    assert len(table1) == 3
    assert [r.values[1] for r in table1] == ["Rajesh", "Suresh", "Mahesh"]
    assert [r.values[2] for r in table1] == [10000, 8000, 6000]
    assert table1.rows[1].values[3] == "Asst. Manager"


def test_header_only(schema):
    assert len(ingest_csv(io.StringIO("Key,Emp_Name,Salary,Job_Title\n"), schema)) == 0


def test_duplicate_key(schema):
    text = "Key,Emp_Name,Salary,Job_Title\n7,a,1,x\n7,b,2,y\n"
    with pytest.raises(DuplicateKey) as info:
        ingest_csv(io.StringIO(text), schema)
    assert info.value.key == 7


def test_null_sensitive_rejected(schema):
    with pytest.raises(NullSensitiveValue) as info:
        ingest_csv(io.StringIO("Key,Emp_Name,Salary,Job_Title\n1,a,,x\n"), schema)
    assert info.value.line == 2


def test_header_mismatch(schema):
    with pytest.raises(SchemaMismatch):
        ingest_csv(io.StringIO("Key,Name,Salary,Job_Title\n"), schema)


@pytest.mark.parametrize("row", ["abc,a,1,x", "0,a,1,x", "1,a,ten,x", "1,a,1"])
def test_parse_errors_carry_line(schema, row):
    with pytest.raises(ParseError) as info:
        ingest_csv(io.StringIO("Key,Emp_Name,Salary,Job_Title\n1,ok,5,y\n" + row + "\n"), schema)
    assert info.value.line == 3


def test_quoted_csv(schema):
    text = 'Key,Emp_Name,Salary,Job_Title\n1,"Doe, John",5,"Says ""hi"""\n'
    t = ingest_csv(io.StringIO(text), schema)
    assert t.rows[0].values[1] == "Doe, John"
    assert t.rows[0].values[3] == 'Says "hi"'


def test_schema_rules():
    with pytest.raises(SchemaMismatch):
        Table([ColumnSpec("Key", Kind.TEXT)])
    with pytest.raises(SchemaMismatch):
        Table([ColumnSpec("Key", Kind.INTEGER, True)])
    with pytest.raises(SchemaMismatch):
        Table([ColumnSpec("Key", Kind.INTEGER), ColumnSpec("Key", Kind.TEXT)])
    with pytest.raises(SchemaMismatch):
        parse_schema_spec("Key:float:0")


def test_schema_spec_parsing():
    specs = parse_schema_spec("Key:integer:0, Salary:decimal:1,Name:text")
    assert specs == [
        ColumnSpec("Key", Kind.INTEGER, False),
        ColumnSpec("Salary", Kind.DECIMAL, True),
        ColumnSpec("Name", Kind.TEXT, False),
    ]


def test_lookup(table1):
    assert lookup_by_key(table1, 2).values[1] == "Suresh"
    assert lookup_by_key(table1, 999) is None
    assert lookup_by_key(table1, 0) is None


def test_lookup_agrees_with_scan():
    rng = random.Random(3)
    for _ in range(20):
        keys = rng.sample(range(1, 500), rng.randint(0, 100))
        t = Table([ColumnSpec("K", Kind.INTEGER), ColumnSpec("V", Kind.INTEGER)], [Record(k, (k, k * 2)) for k in keys])
        for probe in range(0, 502):
            scan = next((r for r in t.rows if r.key == probe), None)
            assert t.lookup(probe) == scan


@pytest.mark.parametrize("text, expected", [
    ("10.50", "10.5"), ("1e3", "1000"), ("-0.000", "0"), ("007", "7"), ("0.25", "0.25"), ("2.000", "2"),
])
def test_canonical_decimal(text, expected):
    assert format(canonical_decimal(text), "f") == expected


def test_table1_roundtrip(table1):
    assert roundtrip(table1) == table1


def test_encrypted_roundtrip_is_byte_exact(pair1):
    back = roundtrip(pair1.main)
    assert back == pair1.main
    assert all(isinstance(r.values[2], CipherEnvelope) for r in back)


def test_escaping():
    for s in ["a\tb", "line\nbreak", "back\\slash", "enc:not-a-cipher", "\\e", "", "\r"]:
        assert unescape_text(escape_text(s)) == s
        assert "\t" not in escape_text(s) and "\n" not in escape_text(s)
    assert escape_text("enc:x").startswith("\\e")


def test_plaintext_enc_prefix_survives():
    schema = [ColumnSpec("K", Kind.INTEGER), ColumnSpec("T", Kind.TEXT, True)]
    t = Table(schema, [Record(1, (1, "enc:000102030405060708090a0b"))])
    assert roundtrip(t).rows[0].values[1] == "enc:000102030405060708090a0b"


def test_truncated_file(table1):
    buf = io.BytesIO()
    save(table1, buf)
    data = buf.getvalue()
    for cut in range(1, len(data)):
        with pytest.raises((FormatError, VersionMismatch)):
            load(io.BytesIO(data[:cut]))


def test_empty_file():
    with pytest.raises(FormatError):
        load(io.BytesIO(b""))


def test_unknown_version(table1):
    buf = io.BytesIO()
    save(table1, buf)
    data = buf.getvalue().replace(b"SEALTABLE v1", b"SEALTABLE v9", 1)
    with pytest.raises(VersionMismatch):
        load(io.BytesIO(data))


def test_not_a_sealtable():
    with pytest.raises(FormatError) as info:
        load(io.BytesIO(b"hello\n"))
    assert info.value.offset == 0


def test_bad_field_reports_offset(table1):
    buf = io.BytesIO()
    save(table1, buf)
    lines = buf.getvalue().split(b"\n")
    lines[3] = b"2\tSuresh\tnotanumber\tx"
    data = b"\n".join(lines)
    with pytest.raises(FormatError) as info:
        load(io.BytesIO(data))
    assert info.value.offset == len(b"\n".join(lines[:3])) + 1


def test_encrypted_value_in_plain_column_rejected():
    data = b"SEALTABLE v1\nK:integer:0\tV:text:0\n1\tenc:000102030405060708090a0bff\nEND\t1\n"
    with pytest.raises(FormatError):
        load(io.BytesIO(data))


text_values = st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=12)


@st.composite
def tables(draw):
    n = draw(st.integers(0, 25))
    keys = draw(st.lists(st.integers(1, 2**64 - 1), min_size=n, max_size=n, unique=True))
    schema = [
        ColumnSpec("Key", Kind.INTEGER),
        ColumnSpec("Name", Kind.TEXT),
        ColumnSpec("Amount", Kind.DECIMAL, True),
        ColumnSpec("Secret", Kind.TEXT, True),
        ColumnSpec("Count", Kind.INTEGER),
    ]
    rows = []
    for k in keys:
        amount = Decimal(draw(st.integers(-10**6, 10**6))) / 100
        secret = draw(st.one_of(
            text_values,
            st.builds(CipherEnvelope, st.binary(min_size=12, max_size=12), st.binary(max_size=20)),
        ))
        rows.append(Record(k, (k, draw(text_values), canonical_decimal(str(amount)), secret, draw(st.integers(-2**70, 2**70)))))
    return Table(schema, rows)


@given(tables())
def test_save_load_identity(table):
    back = roundtrip(table)
    assert back == table
    for a, b in zip(back.rows, table.rows):
        for x, y in zip(a.values, b.values):
            assert type(x) is type(y)
            if isinstance(x, CipherEnvelope):
                assert x.nonce == y.nonce and x.body == y.body
