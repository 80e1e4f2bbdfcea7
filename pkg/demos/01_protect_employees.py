"""Protect a three-row employee table and look at what lands on disk.

Salary is the sensitive column.  After protection the main table holds an
envelope in its place, and a search table in the secure schema pairs each
plaintext salary with an encrypted record key.
"""

import sys
import tempfile
from pathlib import Path

from sealtable import protect as P, storage
from sealtable.cipher import derive_keys, get_cipher

HERE = Path(__file__).parent
SCHEMA = storage.parse_schema_spec("Key:integer:0,Emp_Name:text:0,Salary:integer:1,Job_Title:text:0")

with open(HERE / "data" / "employees.csv", newline="") as fh:
    table = storage.ingest_csv(fh, SCHEMA, name="Encrypted_Data_Table")

keys = derive_keys(b"demo master secret, not for production")
config = P.ProtectConfig(noise_fraction=0, shuffle_seed=7, noise_seed=7, principals={"alice"})
pair = P.protect(table, keys, config, get_cipher("aesgcm"))

out = Path(tempfile.mkdtemp(prefix="sealtable-demo-"))
for path in P.save_protected(pair, out):
    print(path.relative_to(out))

print("\nmain table file:")
sys.stdout.write((out / P.MAIN_FILE).read_text())

# the search table: plaintext values, encrypted keys, aliased column names
search = pair.search_tables["Salary"]
print(f"\n{search.table_id} ({search.alias_key_column}, {search.alias_value_column})")
for row in search.rows:
    print(f"  {row.enc_key.hex()[:32]}...  {row.search_value}")
