"""Noise rows blur exact value counts without changing answers.

A skewed column is protected at several noise fractions.  The search table
grows by ceil(fraction * N) decoy rows whose keys decrypt to the sentinel 0,
yet every query returns the same rows.
"""

import random
from collections import Counter

from sealtable import protect as P
from sealtable.cipher import derive_keys, get_cipher
from sealtable.executor import AuthContext, execute
from sealtable.query import parse, rewrite
from sealtable.storage import ColumnSpec, Kind, Record, Table

rng = random.Random(3)
schema = (ColumnSpec("Id", Kind.INTEGER), ColumnSpec("Diagnosis", Kind.TEXT, sensitive=True))
codes = ["flu"] * 60 + ["asthma"] * 25 + ["diabetes"] * 12 + ["rare"] * 3
table = Table(schema, [Record(i, (i, code)) for i, code in enumerate(rng.sample(codes, len(codes)), 1)], "Clinic")
keys = derive_keys(bytes(32))
cipher = get_cipher("xor")
sql = "SELECT Id FROM Clinic WHERE Diagnosis LIKE 'r%' OR Diagnosis = 'asthma'"

reference = None
for fraction in ("0", "0.05", "0.2", "0.5"):
    config = P.ProtectConfig(noise_fraction=fraction, shuffle_seed=1, noise_seed=2, principals={"dr"})
    pair = P.protect(table, keys, config, cipher)
    search = pair.search_tables["Diagnosis"]
    seen = Counter(row.search_value for row in search.rows)
    result = execute(rewrite(parse(sql), pair.meta, schema), pair, AuthContext.for_user("dr", pair.meta), keys)
    reference = reference or result.rows
    print(f"noise={fraction:<5} rows={len(search):<4} counts={dict(sorted(seen.items()))}  "
          f"decoys skipped={result.stats.noise_filtered:<3} same answer={result.rows == reference}")

# the shuffle is seeded per column, so search-table order says nothing about key order
pair = P.protect(table, keys, P.ProtectConfig(noise_fraction=0, shuffle_seed=9), cipher)
order = [P.decode_key(cipher.decrypt(r.enc_key, keys.search)) for r in pair.search_tables["Diagnosis"].rows]
print("\nfirst keys in search-table order:", order[:12])
