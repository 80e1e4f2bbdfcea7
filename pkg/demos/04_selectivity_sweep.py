"""Where selective decryption stops paying off.

Sweeps selectivity on a synthetic table and prints both strategies side by
side.  The rewritten plan decrypts about 2 values per matched row (plus
decoys); the baseline decrypts the whole column once.  Their times meet a
little below 50% selectivity.

Pass a row count to go bigger, e.g. ``python demos/04_selectivity_sweep.py 50000``.
"""

import sys
from fractions import Fraction

from sealtable import bench, protect as P
from sealtable.cipher import derive_keys, get_cipher

rows = int(sys.argv[1]) if len(sys.argv) > 1 else 10_000
config = bench.BenchConfig(
    row_count=rows,
    selectivity_steps=bench.default_steps(Fraction(1, 20), Fraction(4, 5)),
    repetitions=3,
    decryption_delay_us=2.0,
)
table, workload = bench.generate_workload(config)
keys = derive_keys(bytes(range(32)))
pair = P.protect(table, keys, P.ProtectConfig(noise_fraction=config.noise_fraction), get_cipher("aesgcm"))
report = bench.run(config, pair, workload, keys, get_cipher("aesgcm", config.decryption_delay_us))

print(f"{'sel':>5} {'rewritten ms':>13} {'baseline ms':>12} {'dec rw':>7} {'dec bl':>7}")
for s in report.samples:
    print(f"{s.selectivity:5.2f} {s.time_rewritten / 1000:13.1f} {s.time_baseline / 1000:12.1f} "
          f"{s.decrypts_rewritten:7d} {s.decrypts_baseline:7d}")
mark = "none" if report.crossover_estimate is None else f"{report.crossover_estimate:.3f}"
print(f"\ncrossover at selectivity {mark}")
