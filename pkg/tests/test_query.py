import itertools
import random
from decimal import Decimal

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracle import like_bruteforce, like_regex
from sealtable.errors import SqlSyntaxError, TypeMismatch, UnknownColumn, UnknownTable, UnsupportedNegation
from sealtable.query import (
    And,
    Between,
    Comparison,
    Direct,
    KeyAnd,
    KeyOr,
    Like,
    Not,
    Or,
    PlainFilter,
    Probe,
    QueryAst,
    Rewritten,
    classify,
    explain,
    match_like,
    parse,
    rewrite,
    to_sql,
)

SALARY_QUERY = "SELECT Emp_Name, Salary FROM Encrypted_Data_Table WHERE Salary = 10000"


# parsing

def test_parse_example_query():
    ast = parse(SALARY_QUERY)
    assert ast == QueryAst(("Emp_Name", "Salary"), "Encrypted_Data_Table", Comparison("Salary", "=", 10000))


def test_parse_star_no_where():
    assert parse("SELECT * FROM T") == QueryAst(("*",), "T", None)


def test_empty_projection_is_syntax_error():
    with pytest.raises(SqlSyntaxError) as info:
        parse("SELECT FROM T")
    assert info.value.position == 7
    assert info.value.found == "FROM"
    assert "identifier" in info.value.expected


def test_precedence_not_and_or():
    ast = parse("SELECT * FROM T WHERE a = 1 OR NOT b = 2 AND c = 3")
    assert ast.predicate == Or(Comparison("a", "=", 1), And(Not(Comparison("b", "=", 2)), Comparison("c", "=", 3)))


def test_parentheses_and_between_and():
    ast = parse("select x from t where (a between 1 and 5 or b like 'S%') and c <> 'it''s'")
    assert ast.predicate == And(
        Or(Between("a", 1, 5), Like("b", "S%")),
        Comparison("c", "<>", "it's"),
    )


def test_literals():
    ast = parse("SELECT * FROM T WHERE a >= -3.50 AND b < .5 AND c <= 007")
    a, b, c = ast.predicate.left.left, ast.predicate.left.right, ast.predicate.right
    assert a.literal == Decimal("-3.50") and isinstance(a.literal, Decimal)
    assert b.literal == Decimal("0.5")
    assert c.literal == 7 and isinstance(c.literal, int)


def test_quoted_identifier():
    ast = parse('SELECT "Job Title" FROM T WHERE "Job Title" = \'Peon\';')
    assert ast.projections == ("Job Title",)


@pytest.mark.parametrize("text", [
    "SELECT * FROM T WHERE",
    "SELECT * FROM T WHERE a",
    "SELECT * FROM T WHERE a = ",
    "SELECT * FROM T WHERE a LIKE 5",
    "SELECT * FROM T WHERE (a = 1",
    "SELECT * FROM T WHERE a = 'open",
    "SELECT a, FROM T",
    "SELECT * FROM",
    "SELECT * FROM T extra",
    "DELETE FROM T",
    "SELECT * FROM T WHERE a = 1 #",
])
def test_syntax_errors(text):
    with pytest.raises(SqlSyntaxError):
        parse(text)


# printing

idents = st.sampled_from(["a", "Salary", "Emp_Name", "Job Title", "select", "x1"])
literals = st.one_of(
    st.integers(-10**6, 10**6),
    st.decimals(allow_nan=False, allow_infinity=False, places=2, min_value=-1000, max_value=1000),
    st.text(max_size=6),
)
atoms = st.one_of(
    st.builds(Comparison, idents, st.sampled_from(["=", "<>", "<", "<=", ">", ">="]), literals),
    st.builds(Between, idents, literals, literals),
    st.builds(Like, idents, st.text(alphabet="ab%_'", max_size=5)),
)
predicates = st.recursive(
    atoms,
    lambda inner: st.one_of(st.builds(And, inner, inner), st.builds(Or, inner, inner), st.builds(Not, inner)),
    max_leaves=8,
)
queries = st.builds(
    QueryAst,
    st.one_of(st.just(("*",)), st.lists(idents, min_size=1, max_size=3).map(tuple)),
    idents,
    st.one_of(st.none(), predicates),
)


@given(queries)
def test_print_parse_identity(ast):
    assert parse(to_sql(ast)) == ast


# LIKE

@pytest.mark.parametrize("value, pattern, expected", [
    ("Suresh", "S%", True),
    ("Suresh", "_uresh", True),
    ("Suresh", "uresh", False),
    ("Suresh", "%", True),
    ("", "%", True),
    ("", "_", False),
    ("Suresh", "s%", False),
    ("Suresh", "%e%h", True),
    ("Suresh", "%e%x", False),
    ("a%b", "a%b", True),
    ("aaab", "%a_b", True),
])
def test_like_examples(value, pattern, expected):
    assert match_like(value, pattern) is expected


def test_like_exhaustive_small():
    alphabet = "ab"
    values = ["".join(p) for n in range(5) for p in itertools.product(alphabet, repeat=n)]
    patterns = ["".join(p) for n in range(5) for p in itertools.product("ab%_", repeat=n)]
    for v in values:
        for p in patterns:
            assert match_like(v, p) == like_bruteforce(v, p), (v, p)


def test_like_random_against_bruteforce():
    rng = random.Random(5)
    for _ in range(3000):
        v = "".join(rng.choice("ab") for _ in range(rng.randint(0, 8)))
        p = "".join(rng.choice("ab%_") for _ in range(rng.randint(0, 8)))
        assert match_like(v, p) == like_bruteforce(v, p)


@given(st.text(alphabet="abc", max_size=8), st.text(alphabet="abc%_", max_size=8))
def test_like_matches_regex_translation(value, pattern):
    assert match_like(value, pattern) == like_regex(value, pattern) == like_bruteforce(value, pattern)


# classification and rewriting

def test_classify_example(pair1):
    result = classify(parse(SALARY_QUERY), pair1.meta, pair1.main.schema)
    assert result.touches_encrypted
    assert result.encrypted_atoms == (Comparison("Salary", "=", 10000),)
    assert result.plain_residual is None


def test_classify_plain_query(pair1):
    result = classify(parse("SELECT * FROM Encrypted_Data_Table WHERE Job_Title = 'Peon'"), pair1.meta, pair1.main.schema)
    assert not result.touches_encrypted
    assert result.encrypted_atoms == ()


def test_classify_rejects_negated_encrypted_atom(pair1):
    with pytest.raises(UnsupportedNegation):
        classify(parse("SELECT * FROM Encrypted_Data_Table WHERE NOT (Salary = 10000)"), pair1.meta, pair1.main.schema)
    with pytest.raises(UnsupportedNegation):
        classify(parse("SELECT * FROM Encrypted_Data_Table WHERE Key = 1 OR NOT (Salary = 1 AND Key = 2)"),
                 pair1.meta, pair1.main.schema)


def test_negation_over_plain_is_fine(pair1):
    result = classify(parse("SELECT * FROM Encrypted_Data_Table WHERE Salary = 1 AND NOT Key = 2"),
                      pair1.meta, pair1.main.schema)
    assert result.plain_residual == Not(Comparison("Key", "=", 2))


@pytest.mark.parametrize("sql, error", [
    ("SELECT * FROM Other", UnknownTable),
    ("SELECT Bonus FROM Encrypted_Data_Table", UnknownColumn),
    ("SELECT * FROM Encrypted_Data_Table WHERE Bonus = 1", UnknownColumn),
    ("SELECT * FROM Encrypted_Data_Table WHERE Salary = 'high'", TypeMismatch),
    ("SELECT * FROM Encrypted_Data_Table WHERE Emp_Name = 3", TypeMismatch),
    ("SELECT * FROM Encrypted_Data_Table WHERE Salary LIKE '1%'", TypeMismatch),
    ("SELECT * FROM Encrypted_Data_Table WHERE Salary BETWEEN 1 AND 'z'", TypeMismatch),
])
def test_semantic_errors(pair1, sql, error):
    with pytest.raises(error):
        classify(parse(sql), pair1.meta, pair1.main.schema)


def test_case_insensitive_names(pair1):
    plan = rewrite(parse("select emp_name from encrypted_data_table where SALARY = 8000"), pair1.meta, pair1.main.schema)
    assert isinstance(plan, Rewritten)
    assert plan.ast.projections == ("Emp_Name",)
    assert plan.probes[0].column == "Salary"


def test_classify_is_pure(pair1):
    ast = parse("SELECT * FROM Encrypted_Data_Table WHERE (Salary < 9000 OR Emp_Name = 'x') AND Key > 1")
    assert classify(ast, pair1.meta, pair1.main.schema) == classify(ast, pair1.meta, pair1.main.schema)


def test_rewrite_example(pair1):
    plan = rewrite(parse(SALARY_QUERY), pair1.meta, pair1.main.schema)
    entry = pair1.meta.aliases["Salary"]
    assert isinstance(plan, Rewritten)
    assert plan.key_tree == Probe("Salary", Comparison(entry.alias_value_column, "=", 10000), entry)
    assert plan.residual is None


def test_rewrite_direct(pair1):
    assert isinstance(rewrite(parse("SELECT * FROM Encrypted_Data_Table"), pair1.meta, pair1.main.schema), Direct)


def test_rewrite_range_with_plain_like(pair1):
    plan = rewrite(parse(
        "SELECT * FROM Encrypted_Data_Table WHERE Salary BETWEEN 6000 AND 9000 AND Emp_Name LIKE 'S%'"
    ), pair1.meta, pair1.main.schema)
    entry = pair1.meta.aliases["Salary"]
    assert plan.key_tree == Probe("Salary", Between(entry.alias_value_column, 6000, 9000), entry)
    assert plan.residual == Like("Emp_Name", "S%")


def test_rewrite_mixed_or_uses_plain_filter(pair1):
    plan = rewrite(parse("SELECT * FROM Encrypted_Data_Table WHERE Salary = 1 OR Emp_Name = 'x'"),
                   pair1.meta, pair1.main.schema)
    assert isinstance(plan.key_tree, KeyOr)
    assert plan.key_tree.right == PlainFilter(Comparison("Emp_Name", "=", "x"))
    assert plan.residual is None


def test_rewrite_and_of_encrypted(pair1):
    plan = rewrite(parse("SELECT * FROM Encrypted_Data_Table WHERE Salary > 1 AND Salary < 9000"),
                   pair1.meta, pair1.main.schema)
    assert isinstance(plan.key_tree, KeyAnd)
    assert len(plan.probes) == 2


def test_rewritten_probes_only_reference_aliases(pair1):
    plan = rewrite(parse("SELECT * FROM Encrypted_Data_Table WHERE Salary >= 8000 OR Salary = 6000"),
                   pair1.meta, pair1.main.schema)
    alias = pair1.meta.aliases["Salary"].alias_value_column
    assert all(p.atom.column == alias for p in plan.probes)


def test_explain_example(pair1):
    plan = rewrite(parse(SALARY_QUERY), pair1.meta, pair1.main.schema)
    e = pair1.meta.aliases["Salary"]
    text = explain(plan, pair1.main.schema)
    assert text.startswith("REWRITTEN\nSELECT Emp_Name, DecryptFunction(Salary)")
    assert f"WHERE Key IN (SELECT DecryptFunction({e.alias_key_column}) FROM {e.table_id} " \
           f"WHERE {e.alias_value_column} = 10000)" in text


def test_explain_direct(pair1):
    plan = rewrite(parse("SELECT * FROM Encrypted_Data_Table"), pair1.meta, pair1.main.schema)
    assert explain(plan, pair1.main.schema) == "DIRECT\nSELECT * FROM Encrypted_Data_Table"
