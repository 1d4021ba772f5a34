"""Experiment sweeps and the classical-vs-quantum separation table."""
from __future__ import annotations

import csv
import io
import itertools
import math
import time
from dataclasses import asdict, dataclass, fields
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .classical import check_cap, correctness_exhaustive, cost
from .compiler import bound_value, compile_protocol
from .core import InputMatrix, gip_eval, gip_rows, pad_to_k, random_rows
from .fourier import extract_parity_referee
from .gip import build_quantum_gip, grolmusz_cost, grolmusz_rows
from .quantum import exact_success, qcost
from .specfile import CLASSICAL_FORMAT, classical_from_json, compiled_from_json, load_json

CSV_COLUMNS = ("k", "n", "protocol", "classical_bits", "answer_qubits", "avg_success_exact",
               "avg_success", "worst_success", "bound_exact", "wall_ms")


@dataclass(frozen=True)
class SweepConfig:
    k_values: tuple[int, ...]
    n_values: tuple[int, ...]
    protocol: str                     # grolmusz | quantum-gip | compiled:<file>
    mode: str = "sampled"             # exhaustive | sampled
    samples: int = 1000
    seed: int = 0
    out: Optional[str] = None
    timing: bool = False              # off keeps output byte-identical across runs

    def __post_init__(self):
        if not self.k_values or not self.n_values:
            raise ValueError("k and n ranges must be nonempty")
        if self.mode not in ("exhaustive", "sampled"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode == "sampled" and self.samples < 1:
            raise ValueError("sampled mode needs samples >= 1")
        if not (self.protocol in ("grolmusz", "quantum-gip") or self.protocol.startswith("compiled:")):
            raise ValueError(f"unknown protocol selector {self.protocol!r}")


@dataclass(frozen=True)
class ResultRow:
    k: int
    n: int
    protocol: str
    classical_bits: int
    answer_qubits: int
    avg_success_exact: str
    avg_success: float
    worst_success: str
    bound_exact: str
    wall_ms: int

    def __post_init__(self):
        avg = Fraction(self.avg_success_exact)
        worst = Fraction(self.worst_success)
        if not (0 <= avg <= 1 and 0 <= worst <= 1):
            raise ValueError("success probabilities must lie in [0, 1]")


def parse_range(text: str) -> tuple[int, ...]:
    """'3..5' -> (3, 4, 5); '3,7,9' -> (3, 7, 9); '4' -> (4,)."""
    text = text.strip()
    if ".." in text:
        lo, hi = (int(x) for x in text.split("..", 1))
        if hi < lo:
            raise ValueError(f"empty range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(x) for x in text.split(","))


def _inputs(k: int, n: int, cfg: SweepConfig) -> Iterable[tuple[int, ...]]:
    if cfg.mode == "exhaustive":
        check_cap(k, n)
        return itertools.product(range(1 << n), repeat=k)
    rng = np.random.default_rng([cfg.seed, k, n])
    return (tuple(random_rows(k, n, rng)) for _ in range(cfg.samples))


def _row(k, n, name, classical_bits, answer_qubits, successes, bound, started, timing) -> ResultRow:
    total = sum(successes, Fraction(0))
    avg = total / len(successes)
    wall = int(round((time.perf_counter() - started) * 1000)) if timing else 0
    return ResultRow(k, n, name, classical_bits, answer_qubits, str(avg), float(avg),
                     str(min(successes)), bound, wall)


def _grolmusz_row(k: int, n: int, cfg: SweepConfig) -> ResultRow:
    started = time.perf_counter()
    successes = [Fraction(int(grolmusz_rows(rows, k, n) == gip_rows(rows))) for rows in _inputs(k, n, cfg)]
    return _row(k, n, "grolmusz", grolmusz_cost(k, n), 0, successes, "", started, cfg.timing)


def _quantum_gip_row(k: int, n: int, cfg: SweepConfig) -> ResultRow:
    started = time.perf_counter()
    kq = k if k % 2 else k + 1   # even k: pad with an all-ones row, GIP unchanged
    q = build_quantum_gip(kq, n)
    successes = []
    for rows in _inputs(k, n, cfg):
        m = InputMatrix(k, n, rows)
        successes.append(exact_success(q, pad_to_k(m, kq), gip_eval(m)))
    c = qcost(q)
    return _row(k, n, "quantum-gip", c.classical_bits, c.answer_qubits, successes, "", started, cfg.timing)


def _compiled_row(path: str, k: int, n: int, cfg: SweepConfig) -> Optional[ResultRow]:
    started = time.perf_counter()
    data = load_json(path)
    bound = ""
    if isinstance(data, dict) and data.get("format") == CLASSICAL_FORMAT:
        src = classical_from_json(data)
        if (src.k, src.n) != (k, n):
            return None
        compiled = compile_protocol(src, extract_parity_referee(src, gip_eval).parity)
        bound = bound_value(correctness_exhaustive(src, gip_eval).delta, cost(src))[0]
    else:
        compiled = compiled_from_json(data)
        if (compiled.source.k, compiled.source.n) != (k, n):
            return None
    successes = [exact_success(compiled.quantum, InputMatrix(k, n, rows), gip_rows(rows))
                 for rows in _inputs(k, n, cfg)]
    c = qcost(compiled.quantum)
    return _row(k, n, f"compiled:{path}", c.classical_bits, c.answer_qubits, successes, bound,
                started, cfg.timing)


def run_sweep(cfg: SweepConfig) -> list[ResultRow]:
    rows = []
    for k, n in itertools.product(cfg.k_values, cfg.n_values):
        if cfg.protocol == "grolmusz":
            rows.append(_grolmusz_row(k, n, cfg))
        elif cfg.protocol == "quantum-gip":
            rows.append(_quantum_gip_row(k, n, cfg))
        else:
            row = _compiled_row(cfg.protocol.split(":", 1)[1], k, n, cfg)
            if row is not None:
                rows.append(row)
    return rows


def rows_to_csv(rows: Sequence[ResultRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        d = asdict(r)
        writer.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[ResultRow]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {reader.fieldnames}")
    types = {f.name: f.type for f in fields(ResultRow)}
    out = []
    for rec in reader:
        conv = {}
        for name, value in rec.items():
            t = types[name]
            conv[name] = int(value) if t in (int, "int") else float(value) if t in (float, "float") else value
        out.append(ResultRow(**conv))
    return out


@dataclass(frozen=True)
class SeparationRow:
    n: int
    k: int
    players: int
    classical_bits: int
    answer_qubits: int
    quantum_cost: int            # preamble bits + one simulated answer per other player = 2k-1
    grolmusz_cost: int
    cited_classical_bound: float  # sqrt(n), quoted lower bound, never measured
    cited_label: str = "cited classical lower bound, Omega(sqrt n)"


def nearest_block_size(n: int) -> tuple[int, int]:
    """(n', k) with n' = 2^{k-1}-1, k odd >= 3, closest to n (smaller k on ties)."""
    best = None
    k = 3
    while True:
        size = (1 << (k - 1)) - 1
        cand = (abs(size - n), k, size)
        if best is None or cand < best:
            best = cand
        if size > n:
            break
        k += 2
    return best[2], best[1]


def separation_table(n_values: Sequence[int]) -> list[SeparationRow]:
    rows = []
    for n in n_values:
        n_adj, k = nearest_block_size(n)
        c = qcost(build_quantum_gip(k, n_adj))
        rows.append(SeparationRow(n_adj, k, len(build_quantum_gip(k, n_adj).players) + 1,
                                  c.classical_bits, c.answer_qubits, c.simulated_bits,
                                  grolmusz_cost(k, n_adj), math.sqrt(n_adj)))
    return rows


def separation_to_csv(rows: Sequence[SeparationRow]) -> str:
    buf = io.StringIO()
    names = [f.name for f in fields(SeparationRow)]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for r in rows:
        d = asdict(r)
        writer.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in names])
    return buf.getvalue()
