"""``sealtable`` command line: protect, query, explain, bench, inspect.

Exit codes are stable: see :data:`EXIT_CODES`.  Data goes to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import os
import secrets
import sys
from pathlib import Path

from . import bench, protect as protect_mod, storage
from .cipher import CIPHERS, DecryptionCounter, derive_keys, get_cipher
from .errors import (
    BenchError,
    CipherError,
    ProtectError,
    QueryError,
    SqlSyntaxError,
    StorageError,
    Unauthorized,
)
from .executor import UNSUCCESSFUL, AuthContext, baseline_full_decrypt, execute
from .query import explain, parse, rewrite

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_STORAGE = 4
EXIT_PROTECT = 5
EXIT_SYNTAX = 6
EXIT_SEMANTIC = 7
EXIT_UNAUTHORIZED = 8
EXIT_CIPHER = 9
EXIT_BENCH = 10

# most specific first
EXIT_CODES = (
    (Unauthorized, EXIT_UNAUTHORIZED),
    (SqlSyntaxError, EXIT_SYNTAX),
    (QueryError, EXIT_SEMANTIC),
    (CipherError, EXIT_CIPHER),
    (ProtectError, EXIT_PROTECT),
    (StorageError, EXIT_STORAGE),
    (BenchError, EXIT_BENCH),
    (OSError, EXIT_IO),
)


def _read_key_file(path: Path, create: bool) -> bytes:
    if path.exists():
        return bytes.fromhex(path.read_text().strip())
    if not create:
        raise FileNotFoundError(f"key file {path} does not exist")
    master = secrets.token_bytes(32)
    fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o600)
    with os.fdopen(fd, "w") as fh:
        fh.write(master.hex() + "\n")
    return master


def _tsv(value) -> str:
    text = storage.format_value(value)
    return text.replace("\\", "\\\\").replace("\t", "\\t").replace("\n", "\\n")


def cmd_protect(args) -> int:
    schema = storage.parse_schema_spec(args.schema)
    csv_path = Path(args.csv)
    name = args.table or csv_path.stem
    with open(csv_path, newline="", encoding="utf-8") as fh:
        table = storage.ingest_csv(fh, schema, name=name)
    master = _read_key_file(Path(args.key_file), create=True)
    seed = args.seed if args.seed is not None else secrets.randbits(63)
    config = protect_mod.ProtectConfig(
        noise_fraction=args.noise,
        shuffle_seed=seed,
        noise_seed=seed,
        principals=frozenset(args.grant or ()),
    )
    pair = protect_mod.protect(table, derive_keys(master, shared=args.shared_key), config, get_cipher(args.cipher))
    written = protect_mod.save_protected(pair, args.out)

    noise = protect_mod.noise_count(len(table), config.noise_fraction)
    print(f"protected {len(table)} rows of {name} into {args.out}")
    print(f"main table\t{written[0]}")
    for column, search in pair.search_tables.items():
        print(
            f"search table\t{column}\trows={len(search)}\tnoise={noise}\t"
            f"aliases={search.alias_key_column},{search.alias_value_column}"
        )
    print(f"principals\t{','.join(sorted(config.principals)) or '-'}")
    return EXIT_OK


def _load_plan(directory: str, sql: str):
    pair = protect_mod.load_protected(directory)
    ast = parse(sql)
    return pair, ast, rewrite(ast, pair.meta, pair.main.schema)


def cmd_query(args) -> int:
    pair, ast, plan = _load_plan(args.dir, args.sql if args.sql != "-" else sys.stdin.read())
    keys = derive_keys(_read_key_file(Path(args.key_file), create=False), shared=args.shared_key)
    counter = DecryptionCounter("cli")
    if args.strategy == "baseline":
        result = baseline_full_decrypt(plan.ast, pair, keys.main, counter)
    else:
        result = execute(plan, pair, AuthContext.for_user(args.user, pair.meta), keys, counter)
    out = sys.stdout
    out.write("\t".join(result.columns) + "\n")
    for row in result.rows:
        out.write("\t".join(_tsv(v) for v in row) + "\n")
    if args.stats:
        out.write(result.stats.trailer() + "\n")
    if result.unsuccessful:
        print(UNSUCCESSFUL, file=sys.stderr)
    return EXIT_OK


def cmd_explain(args) -> int:
    directory = Path(args.dir)
    with open(directory / protect_mod.SECURE_DIR / protect_mod.META_FILE, "rb") as fh:
        meta = protect_mod.load_metadata(fh)
    with open(directory / protect_mod.MAIN_FILE, "rb") as fh:
        schema = storage.read_schema(fh)
    plan = rewrite(parse(args.sql if args.sql != "-" else sys.stdin.read()), meta, schema)
    print(explain(plan, schema))
    return EXIT_OK


def cmd_inspect(args) -> int:
    pair = protect_mod.load_protected(args.dir)
    main = pair.main
    print(f"table\t{pair.meta.table_name}")
    print(f"rows\t{len(main)}")
    print("columns\t" + ",".join(c.spec() for c in main.schema))
    print(f"cipher\t{pair.meta.cipher_name}")
    auth = AuthContext.for_user(args.user, pair.meta) if args.user else None
    if auth is None or pair.meta.secure_schema not in auth.granted:
        print("secure schema\t(restricted)")
        return EXIT_OK
    print(f"noise_fraction\t{pair.meta.noise_fraction}")
    for column, entry in pair.meta.aliases.items():
        search = pair.search_tables[column]
        print(f"search table\t{column}\t{entry.table_id}\trows={len(search)}\t{entry.alias_key_column},{entry.alias_value_column}")
    return EXIT_OK


def cmd_bench(args) -> int:
    config = bench.BenchConfig(
        row_count=args.rows,
        selectivity_steps=bench.default_steps(args.steps, args.max_selectivity),
        repetitions=args.reps,
        decryption_delay_us=args.delay_us,
        noise_fraction=args.noise,
        seed=args.seed,
    )
    table, workload = bench.generate_workload(config)
    keys = derive_keys(secrets.token_bytes(32))
    pair = protect_mod.protect(
        table,
        keys,
        protect_mod.ProtectConfig(noise_fraction=config.noise_fraction, shuffle_seed=args.seed, noise_seed=args.seed),
        get_cipher(args.cipher),
    )
    report = bench.run(config, pair, workload, keys, get_cipher(args.cipher, args.delay_us))
    if args.out:
        with open(args.out, "w", newline="") as fh:
            bench.emit(report, fh)
    else:
        bench.emit(report, sys.stdout)
    mark = "none" if report.crossover_estimate is None else f"{report.crossover_estimate:.3f}"
    print(f"crossover={mark}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sealtable", description="Query encrypted columns through shuffled search tables.")
    sub = parser.add_subparsers(dest="command", required=True)

    def keyed(p):
        p.add_argument("--key-file", required=True, help="hex master secret (created by protect if missing)")
        p.add_argument("--shared-key", action="store_true", help="use one derived key for both tables")

    p = sub.add_parser("protect", help="encrypt a CSV into a main table plus search tables")
    p.add_argument("csv")
    p.add_argument("--schema", required=True, help="name:kind:sensitive,... (first column is the key)")
    p.add_argument("--out", required=True)
    p.add_argument("--table", help="table name (default: CSV file stem)")
    p.add_argument("--noise", default="0.05", help="noise rows as a fraction of real rows")
    p.add_argument("--seed", type=int, help="shuffle/noise seed (default: random)")
    p.add_argument("--grant", action="append", metavar="USER", help="user allowed into the secure schema")
    p.add_argument("--cipher", choices=sorted(CIPHERS), default="aesgcm")
    keyed(p)
    p.set_defaults(func=cmd_protect)

    p = sub.add_parser("query", help="run a SELECT against a protected directory")
    p.add_argument("dir")
    p.add_argument("sql", help="query text, or - to read stdin")
    p.add_argument("--user", required=True)
    p.add_argument("--stats", action="store_true")
    p.add_argument("--strategy", choices=("rewritten", "baseline"), default="rewritten")
    keyed(p)
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("explain", help="show the rewritten plan without touching data")
    p.add_argument("dir")
    p.add_argument("sql")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("inspect", help="summarise a protected directory")
    p.add_argument("dir")
    p.add_argument("--user")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("bench", help="selectivity sweep of both strategies, CSV output")
    p.add_argument("--rows", type=int, default=50_000)
    p.add_argument("--steps", default="0.02", help="selectivity increment")
    p.add_argument("--max-selectivity", default="0.6")
    p.add_argument("--reps", type=int, default=5)
    p.add_argument("--delay-us", type=float, default=2.0)
    p.add_argument("--noise", default="0.05")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cipher", choices=sorted(CIPHERS), default="aesgcm")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        for exc_type, code in EXIT_CODES:
            if isinstance(exc, exc_type):
                print(f"sealtable: {exc}", file=sys.stderr)
                return code
        if isinstance(exc, ValueError):
            print(f"sealtable: {exc}", file=sys.stderr)
            return EXIT_USAGE
        raise


if __name__ == "__main__":
    sys.exit(main())
