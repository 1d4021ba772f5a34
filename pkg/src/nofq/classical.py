"""Classical Number-on-the-Forehead protocols in the referee formulation.

Answers are packed ints. The referee sees the concatenation A_1 A_2 ... A_k
with A_1 in the most significant position, C = sum of the answer widths.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .core import ForeheadView, InputMatrix, all_matrices, forehead_view, random_rows
from .errors import CapExceeded, ProtocolError

ENUMERATION_CAP = 24  # max k*n (plus coin bits) for exhaustive evaluation

AnswerMap = Callable[[ForeheadView], int]
DependentMap = Callable[[ForeheadView, int], int]
Referee = Callable[[int], int]
BooleanFunction = Callable[[InputMatrix], int]


class TableMap:
    """Answer map given as a truth table indexed by ``ForeheadView.key``."""

    def __init__(self, table: Sequence[int], width: int):
        self.table = tuple(int(v) for v in table)
        self.width = width
        if any(not 0 <= v < (1 << width) for v in self.table):
            raise ProtocolError(f"table entry does not fit in {width} bits")

    def __call__(self, view: ForeheadView) -> int:
        return self.table[view.key]


class TableReferee:
    """Referee given as a 2^C truth table over the concatenated answers."""

    def __init__(self, table: Sequence[int]):
        self.table = tuple(int(v) & 1 for v in table)

    def __call__(self, answers: int) -> int:
        return self.table[answers]


def concat_answers(answers: Sequence[int], widths: Sequence[int]) -> int:
    out = 0
    for a, w in zip(answers, widths):
        out = (out << w) | a
    return out


def split_answers(concat: int, widths: Sequence[int]) -> tuple[int, ...]:
    parts = []
    shift = sum(widths)
    for w in widths:
        shift -= w
        parts.append((concat >> shift) & ((1 << w) - 1))
    return tuple(parts)


@dataclass(frozen=True)
class SimultaneousProtocol:
    k: int
    n: int
    widths: tuple[int, ...]
    answer_maps: tuple[AnswerMap, ...]
    referee: Referee
    name: str = "simultaneous"

    def __post_init__(self):
        if len(self.widths) != self.k or len(self.answer_maps) != self.k:
            raise ProtocolError("need one width and one answer map per player")
        if any(w < 0 for w in self.widths):
            raise ProtocolError("answer widths must be nonnegative")

    def referee_table(self) -> np.ndarray:
        c = sum(self.widths)
        return np.array([self.referee(a) & 1 for a in range(1 << c)], dtype=np.int8)


@dataclass(frozen=True)
class TwoRoundProtocol:
    """The first speaker answers; everyone else answers knowing that message.

    ``dependent_maps[i-1]`` is ignored for the first speaker (use None).
    """

    k: int
    n: int
    first_speaker: int
    widths: tuple[int, ...]
    first_map: AnswerMap
    dependent_maps: tuple[Optional[DependentMap], ...]
    referee: Referee
    name: str = "two-round"

    def __post_init__(self):
        if not 1 <= self.first_speaker <= self.k:
            raise ProtocolError("first speaker out of range")
        if len(self.widths) != self.k or len(self.dependent_maps) != self.k:
            raise ProtocolError("need one width and one map slot per player")


@dataclass(frozen=True)
class PublicCoinProtocol:
    """Shared randomness made explicit: ``coins`` uniform bits pick a deterministic protocol."""

    coins: int
    instantiate: Callable[[int], Union[SimultaneousProtocol, TwoRoundProtocol]]
    k: int = field(init=False)
    n: int = field(init=False)

    def __post_init__(self):
        base = self.instantiate(0)
        object.__setattr__(self, "k", base.k)
        object.__setattr__(self, "n", base.n)


Protocol = Union[SimultaneousProtocol, TwoRoundProtocol]


def _check_width(answer: int, width: int, player: int) -> int:
    if not 0 <= answer < (1 << width):
        raise ProtocolError(f"player {player} answered {answer}, which is not a {width}-bit string")
    return answer


def run_classical(p: Protocol, m: InputMatrix) -> tuple[int, tuple[int, ...]]:
    """Run a deterministic protocol; returns (referee output, per-player answers)."""
    if p.k != m.k:
        raise ProtocolError(f"protocol has {p.k} players but the matrix has {m.k} rows")
    if isinstance(p, SimultaneousProtocol):
        answers = tuple(_check_width(amap(forehead_view(m, i)), w, i)
                        for i, (amap, w) in enumerate(zip(p.answer_maps, p.widths), 1))
    elif isinstance(p, TwoRoundProtocol):
        s = p.first_speaker
        first = _check_width(p.first_map(forehead_view(m, s)), p.widths[s - 1], s)
        answers = tuple(
            first if i == s else _check_width(p.dependent_maps[i - 1](forehead_view(m, i), first), p.widths[i - 1], i)
            for i in range(1, p.k + 1))
    else:
        raise ProtocolError(f"cannot run {type(p).__name__} directly")
    return p.referee(concat_answers(answers, p.widths)) & 1, answers


def cost(p) -> int:
    """Total answer length; input independent by construction."""
    if isinstance(p, PublicCoinProtocol):
        return cost(p.instantiate(0))
    return sum(p.widths)


@dataclass(frozen=True)
class CorrectnessReport:
    worst_case: Fraction
    average_case: Fraction
    mode: str
    inputs: int
    samples: Optional[int] = None
    seed: Optional[int] = None

    @property
    def delta(self) -> Fraction:
        return self.average_case - Fraction(1, 2)


def _success(p, f: BooleanFunction, m: InputMatrix) -> Fraction:
    target = f(m) & 1
    if isinstance(p, PublicCoinProtocol):
        hits = sum(run_classical(p.instantiate(r), m)[0] == target for r in range(1 << p.coins))
        return Fraction(hits, 1 << p.coins)
    return Fraction(int(run_classical(p, m)[0] == target))


def check_cap(k: int, n: int, extra_bits: int = 0) -> None:
    if k * n + extra_bits > ENUMERATION_CAP:
        raise CapExceeded(
            f"exhaustive evaluation needs k*n (+coins) <= {ENUMERATION_CAP}, got {k * n + extra_bits}; "
            "use sampled mode instead")


def correctness_exhaustive(p, f: BooleanFunction) -> CorrectnessReport:
    coins = p.coins if isinstance(p, PublicCoinProtocol) else 0
    check_cap(p.k, p.n, coins)
    total = Fraction(0)
    worst = Fraction(1)
    count = 0
    for m in all_matrices(p.k, p.n):
        s = _success(p, f, m)
        total += s
        worst = min(worst, s)
        count += 1
    return CorrectnessReport(worst, total / count, "exhaustive", count)


def correctness_sampled(p, f: BooleanFunction, samples: int, seed: int) -> CorrectnessReport:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    total = Fraction(0)
    worst = Fraction(1)
    for _ in range(samples):
        m = InputMatrix(p.k, p.n, tuple(random_rows(p.k, p.n, rng)))
        s = _success(p, f, m)
        total += s
        worst = min(worst, s)
    return CorrectnessReport(worst, total / samples, "sampled", samples, samples, seed)


def table_protocol(k: int, n: int, widths: Sequence[int], tables: Sequence[Sequence[int]],
                   referee_table: Sequence[int], name: str = "table") -> SimultaneousProtocol:
    view_size = 1 << ((k - 1) * n)
    for i, t in enumerate(tables, 1):
        if len(t) != view_size:
            raise ProtocolError(f"player {i}: table needs {view_size} entries, got {len(t)}")
    if len(referee_table) != 1 << sum(widths):
        raise ProtocolError(f"referee table needs {1 << sum(widths)} entries")
    maps = tuple(TableMap(t, w) for t, w in zip(tables, widths))
    return SimultaneousProtocol(k, n, tuple(widths), maps, TableReferee(referee_table), name)


def random_protocol(k: int, n: int, widths: Sequence[int], rng: np.random.Generator,
                    name: str = "random") -> SimultaneousProtocol:
    view_size = 1 << ((k - 1) * n)
    tables = [rng.integers(0, 1 << w, size=view_size).tolist() if w else [0] * view_size for w in widths]
    referee = rng.integers(0, 2, size=1 << sum(widths)).tolist()
    return table_protocol(k, n, widths, tables, referee, name)


def tabulate(p: SimultaneousProtocol) -> SimultaneousProtocol:
    """Freeze an arbitrary simultaneous protocol into truth tables."""
    tables = []
    for i in range(1, p.k + 1):
        amap = p.answer_maps[i - 1]
        tables.append([amap(ForeheadView.from_key(i, p.k, p.n, key))
                       for key in range(1 << ((p.k - 1) * p.n))])
    return table_protocol(p.k, p.n, p.widths, tables, p.referee_table().tolist(), p.name)


def constant_protocol(k: int, n: int, output: int, widths: Optional[Sequence[int]] = None) -> SimultaneousProtocol:
    widths = tuple(widths) if widths is not None else (1,) * k
    return SimultaneousProtocol(k, n, widths, tuple((lambda v: 0) for _ in widths),
                                lambda a, _o=output & 1: _o, f"constant-{output & 1}")


def permute_players(p: SimultaneousProtocol, perm: Sequence[int]) -> SimultaneousProtocol:
    """Protocol run on the row-permuted input that reproduces p's behavior.

    Physical player i evaluates p's map for player perm[i-1]; the referee
    reorders the answers back before applying p's referee.
    """
    k = p.k
    inv = {perm[i] : i + 1 for i in range(k)}
    widths = tuple(p.widths[perm[i] - 1] for i in range(k))

    def make_map(i):
        src = perm[i - 1]
        amap = p.answer_maps[src - 1]

        def mapped(view: ForeheadView) -> int:
            # physical row r holds original row perm[r-1]
            rows = {perm[r - 1]: view.row(r) for r in range(1, k + 1) if r != i}
            return amap(ForeheadView(src, view.n, tuple(rows[q] for q in range(1, k + 1) if q != src)))
        return mapped

    def referee(concat: int) -> int:
        parts = split_answers(concat, widths)
        original = [parts[inv[q] - 1] for q in range(1, k + 1)]
        return p.referee(concat_answers(original, p.widths))

    return SimultaneousProtocol(k, p.n, widths, tuple(make_map(i) for i in range(1, k + 1)), referee,
                                p.name + "-permuted")


def permute_rows(m: InputMatrix, perm: Sequence[int]) -> InputMatrix:
    """Row r of the result is row perm[r-1] of m."""
    return InputMatrix(m.k, m.n, tuple(m.rows[q - 1] for q in perm))
