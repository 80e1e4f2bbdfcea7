"""Rewrite a query over an encrypted column and run it two ways.

The planner turns ``WHERE Salary = 10000`` into a key lookup through the
search table.  The executor then decrypts one record key and one salary,
while the baseline decrypts the whole Salary column.
"""

from pathlib import Path

from sealtable import protect as P, storage
from sealtable.cipher import DecryptionCounter, derive_keys, get_cipher
from sealtable.errors import Unauthorized
from sealtable.executor import AuthContext, baseline_full_decrypt, execute
from sealtable.query import explain, parse, rewrite

HERE = Path(__file__).parent
SCHEMA = storage.parse_schema_spec("Key:integer:0,Emp_Name:text:0,Salary:integer:1,Job_Title:text:0")

with open(HERE / "data" / "employees.csv", newline="") as fh:
    table = storage.ingest_csv(fh, SCHEMA, name="Encrypted_Data_Table")
keys = derive_keys(b"demo master secret, not for production")
pair = P.protect(table, keys, P.ProtectConfig(noise_fraction=0, principals={"alice"}), get_cipher("aesgcm"))

sql = "SELECT Emp_Name, Salary FROM Encrypted_Data_Table WHERE Salary = 10000"
ast = parse(sql)
plan = rewrite(ast, pair.meta, pair.main.schema)
print(explain(plan, pair.main.schema), end="\n\n")

counter = DecryptionCounter("rewritten")
result = execute(plan, pair, AuthContext.for_user("alice", pair.meta), keys, counter)
print("rewritten:", result.rows, f"({counter.count} decrypts)")
print(result.stats.trailer())

counter = DecryptionCounter("baseline")
result = baseline_full_decrypt(ast, pair, keys.main, counter)
print("baseline: ", result.rows, f"({counter.count} decrypts)")

# ranges and fuzzy matches go through the same search table
for sql in (
    "SELECT * FROM Encrypted_Data_Table WHERE Salary BETWEEN 6000 AND 9000",
    "SELECT Emp_Name FROM Encrypted_Data_Table WHERE Salary > 7000 AND Job_Title LIKE '%Manager'",
    "SELECT Emp_Name FROM Encrypted_Data_Table WHERE Salary = 1",
):
    result = execute(rewrite(parse(sql), pair.meta, pair.main.schema), pair,
                     AuthContext.for_user("alice", pair.meta), keys)
    print(f"\n{sql}\n  -> {result.rows or result.status}")

try:
    execute(plan, pair, AuthContext.for_user("mallory", pair.meta), keys)
except Unauthorized as exc:
    print("\nmallory:", exc)
