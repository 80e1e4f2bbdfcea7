"""Selectivity sweep comparing selective two-phase decryption with full-column decryption.

The workload table holds a sensitive integer column whose values are a
seeded permutation of ``0..row_count-1``, so ``BETWEEN lo AND lo+k-1`` matches
exactly ``k`` rows.
"""

from __future__ import annotations

import csv
import gc
import io
import random
import statistics
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import TextIO

from .cipher import Cipher, DecryptionCounter, KeyRing
from .errors import BenchError, MismatchedWorkload
from .executor import AuthContext, baseline_full_decrypt, execute
from .protect import ProtectedPair, as_fraction
from .query import parse, rewrite
from .storage import ColumnSpec, Kind, Record, Table

TABLE_NAME = "Donors"
SCHEMA = (
    ColumnSpec("Donor_Id", Kind.INTEGER),
    ColumnSpec("Blood_Group", Kind.TEXT),
    ColumnSpec("Reading", Kind.INTEGER, sensitive=True),
)
BLOOD_GROUPS = ("A+", "A-", "B+", "B-", "AB+", "AB-", "O+", "O-")
CSV_HEADER = ["selectivity", "time_rewritten_us", "time_baseline_us", "decrypts_rewritten", "decrypts_baseline"]


def default_steps(step=Fraction(1, 50), maximum=Fraction(3, 5)) -> tuple:
    step, maximum = as_fraction(step), as_fraction(maximum)
    count = int(maximum / step)
    return tuple(step * i for i in range(1, count + 1))


@dataclass
class BenchConfig:
    row_count: int = 50_000
    selectivity_steps: tuple = field(default_factory=default_steps)
    repetitions: int = 5
    decryption_delay_us: float = 2.0
    noise_fraction: Fraction = Fraction(1, 20)
    seed: int = 0

    def __post_init__(self):
        if self.row_count < 1:
            raise BenchError("row_count must be positive")
        if self.repetitions < 1:
            raise BenchError("repetitions must be positive")
        steps = tuple(as_fraction(s) for s in self.selectivity_steps)
        if not steps:
            raise BenchError("at least one selectivity step is required")
        if any(not 0 < s <= 1 for s in steps) or any(a >= b for a, b in zip(steps, steps[1:])):
            raise BenchError("selectivity steps must be strictly increasing within (0, 1]")
        self.selectivity_steps = steps
        self.noise_fraction = as_fraction(self.noise_fraction)


@dataclass(frozen=True)
class WorkloadQuery:
    sql: str
    selectivity: Fraction
    matched: int


@dataclass
class BenchSample:
    selectivity: float
    time_rewritten: float  # microseconds
    time_baseline: float  # microseconds
    decrypts_rewritten: int
    decrypts_baseline: int


@dataclass
class BenchReport:
    samples: list = field(default_factory=list)
    crossover_estimate: float | None = None


def generate_workload(config: BenchConfig) -> tuple[Table, list[WorkloadQuery]]:
    rng = random.Random(config.seed)
    n = config.row_count
    readings = list(range(n))
    rng.shuffle(readings)
    rows = [
        Record(key, (key, BLOOD_GROUPS[rng.randrange(len(BLOOD_GROUPS))], reading))
        for key, reading in enumerate(readings, start=1)
    ]
    table = Table(SCHEMA, rows, name=TABLE_NAME)
    queries = []
    for fraction in config.selectivity_steps:
        k = round(fraction * n)
        lo = rng.randint(0, n - k)
        sql = f"SELECT Donor_Id, Reading FROM {TABLE_NAME} WHERE Reading BETWEEN {lo} AND {lo + k - 1}"
        queries.append(WorkloadQuery(sql, Fraction(k, n), k))
    return table, queries


def _timed(fn):
    # as timeit does: keep collector pauses out of the measurement
    enabled = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter_ns()
        result = fn()
        return (time.perf_counter_ns() - start) / 1000.0, result
    finally:
        if enabled:
            gc.enable()


def crossover(samples: list[BenchSample]) -> float | None:
    """Selectivity where rewritten time first catches up with baseline, by linear interpolation."""
    for a, b in zip(samples, samples[1:]):
        da = a.time_rewritten - a.time_baseline
        db = b.time_rewritten - b.time_baseline
        if da < 0 <= db:
            return a.selectivity + (b.selectivity - a.selectivity) * (-da) / (db - da)
    return None


def run(config: BenchConfig, pair: ProtectedPair, workload: list[WorkloadQuery], keys: KeyRing, cipher: Cipher) -> BenchReport:
    """Time both strategies at each step; abort if their row sets ever differ."""
    auth = AuthContext("bench", frozenset({pair.meta.secure_schema}))
    report = BenchReport()
    for query in workload:
        ast = parse(query.sql)
        plan = rewrite(ast, pair.meta, pair.main.schema)
        times_rw, times_bl = [], []
        counts_rw, counts_bl = set(), set()
        for rep in range(config.repetitions):
            counter = DecryptionCounter("rewritten")
            t_rw, res_rw = _timed(lambda: execute(plan, pair, auth, keys, counter, cipher))
            times_rw.append(t_rw)
            counts_rw.add(counter.count)
            counter = DecryptionCounter("baseline")
            t_bl, res_bl = _timed(lambda: baseline_full_decrypt(ast, pair, keys.main, counter, cipher))
            times_bl.append(t_bl)
            counts_bl.add(counter.count)
            if rep == 0 and res_rw.rows != res_bl.rows:
                raise MismatchedWorkload(f"strategies disagree on {query.sql!r}")
        if len(counts_rw) != 1 or len(counts_bl) != 1:
            raise BenchError("decrypt counts varied between repetitions")
        report.samples.append(BenchSample(
            float(query.selectivity),
            statistics.median(times_rw),
            statistics.median(times_bl),
            counts_rw.pop(),
            counts_bl.pop(),
        ))
    report.crossover_estimate = crossover(report.samples)
    return report


def emit(report: BenchReport, sink: TextIO) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for s in report.samples:
        writer.writerow([repr(s.selectivity), repr(s.time_rewritten), repr(s.time_baseline), s.decrypts_rewritten, s.decrypts_baseline])
    mark = "none" if report.crossover_estimate is None else repr(report.crossover_estimate)
    sink.write(f"# crossover={mark}\n")


def parse_report(source: TextIO) -> BenchReport:
    """Inverse of :func:`emit`."""
    lines = source.read().splitlines()
    if not lines or lines[0].split(",") != CSV_HEADER:
        raise BenchError("missing bench CSV header")
    report = BenchReport()
    seen_crossover = False
    for line in lines[1:]:
        if line.startswith("# crossover="):
            value = line.split("=", 1)[1]
            report.crossover_estimate = None if value == "none" else float(value)
            seen_crossover = True
            continue
        sel, t_rw, t_bl, d_rw, d_bl = next(csv.reader([line]))
        report.samples.append(BenchSample(float(sel), float(t_rw), float(t_bl), int(d_rw), int(d_bl)))
    if not seen_crossover:
        raise BenchError("missing crossover line")
    return report


def emit_text(report: BenchReport) -> str:
    buf = io.StringIO()
    emit(report, buf)
    return buf.getvalue()
