"""Generalized Inner Product protocols: Grolmusz's classical protocol and the exact quantum one.

Grolmusz block protocol (k players, block of at most 2^{k-1}-1 columns):

* Player 1 sees rows 2..k, i.e. every column pattern u_j in {0,1}^{k-1}.
  By pigeonhole some pattern w is missing. If 1^{k-1} itself is missing no
  column can be all-ones, so it announces w = 1^{k-1} with the flag set.
* Let N(v) = sum_j x_1^j [u_j = v] (mod 2); GIP on the block is N(1^{k-1}).
  Walk from 1^{k-1} to w one coordinate at a time, last coordinate first.
  The step at coordinate c changes the pattern only there, so
  N(before) + N(after) counts x_1-weighted columns agreeing with ``before``
  off coordinate c. Player c+1 sees exactly those rows (plus row 1) and
  announces that parity, or 0 when w_c = 1. The sum telescopes to
  N(1^{k-1}) + N(w) = N(1^{k-1}).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from fractions import Fraction
from typing import Optional, Sequence

from .classical import TwoRoundProtocol, split_answers
from .core import ForeheadView, InputMatrix
from .errors import ProtocolError
from .quantum import Preamble, ProductReferee, QuantumNOFProtocol, QuantumPlayer, plus_minus_measurement


def block_capacity(k: int) -> int:
    return (1 << (k - 1)) - 1


def block_count(k: int, n: int) -> int:
    cap = block_capacity(k)
    return -(-n // cap)


def grolmusz_cost(k: int, n: int) -> int:
    return (2 * k - 1) * block_count(k, n)


@lru_cache(maxsize=None)
def block_masks(k: int, n: int) -> tuple[int, ...]:
    """Column masks of the blocks, leftmost columns first."""
    cap = block_capacity(k)
    masks = []
    for start in range(0, n, cap):
        width = min(cap, n - start)
        masks.append(((1 << width) - 1) << (n - start - width))
    return tuple(masks)


def _columns_with_pattern(pattern: int, rows: Sequence[int], mask: int) -> int:
    """Columns (within mask) whose entries in ``rows`` spell ``pattern``, first row = MSB."""
    acc = mask
    top = len(rows) - 1
    for c, r in enumerate(rows):
        acc &= r if (pattern >> (top - c)) & 1 else ~r
        if not acc:
            break
    return acc


def missing_pattern(rows: Sequence[int], mask: int) -> tuple[int, bool]:
    """(w, flag): 1^{k-1} with flag when absent, else the smallest absent pattern."""
    width = len(rows)
    ones = (1 << width) - 1
    if not _columns_with_pattern(ones, rows, mask):
        return ones, True
    for v in range(ones):
        if not _columns_with_pattern(v, rows, mask):
            return v, False
    raise AssertionError("pigeonhole violated: block wider than 2^{k-1}-1 columns")


def first_message(others: Sequence[int], k: int, n: int) -> int:
    """Player 1's message from rows 2..k: per block, w (k-1 bits) then the flag bit."""
    msg = 0
    for mask in block_masks(k, n):
        w, flag = missing_pattern(others, mask)
        msg = (msg << k) | (w << 1) | int(flag)
    return msg


def decode_first_message(msg: int, k: int, n: int) -> list[tuple[int, bool]]:
    blocks = block_count(k, n)
    out = []
    for b in range(blocks):
        chunk = (msg >> (k * (blocks - 1 - b))) & ((1 << k) - 1)
        out.append((chunk >> 1, bool(chunk & 1)))
    return out


def player_bits(i: int, visible: Sequence[Optional[int]], msg: int, k: int, n: int) -> int:
    """Player i's per-block bits (block 1 most significant).

    ``visible[r-1]`` is row r, or None for the player's own row.
    """
    if not 2 <= i <= k:
        raise ProtocolError(f"player {i} does not send a parity bit")
    if visible[i - 1] is not None:
        raise ProtocolError("player must not see its own row")
    c = i - 1  # coordinate of u_j this player cannot see
    x1 = visible[0]
    out = 0
    for mask, (w, flag) in zip(block_masks(k, n), decode_first_message(msg, k, n)):
        bit = 0
        if not flag and not (w >> (k - 1 - c)) & 1:
            acc = mask & x1
            for cc in range(1, k):
                if cc == c:
                    continue
                # hybrid pattern: 1 on coordinates <= c, w beyond
                want = 1 if cc < c else (w >> (k - 1 - cc)) & 1
                r = visible[cc]
                acc &= r if want else ~r
            bit = acc.bit_count() & 1
        out = (out << 1) | bit
    return out


@dataclass(frozen=True)
class GrolmuszTranscript:
    w: int
    flag: bool
    bits: tuple[int, ...]  # b_2..b_k


@dataclass(frozen=True)
class GrolmuszResult:
    output: int
    cost: int
    blocks: tuple[GrolmuszTranscript, ...]


def _run(rows: Sequence[int], k: int, n: int) -> GrolmuszResult:
    msg = first_message(rows[1:], k, n)
    per_player = []
    for i in range(2, k + 1):
        visible = list(rows)
        visible[i - 1] = None
        per_player.append(player_bits(i, visible, msg, k, n))
    blocks = []
    out = 0
    nb = block_count(k, n)
    for b, (w, flag) in enumerate(decode_first_message(msg, k, n)):
        bits = tuple((pb >> (nb - 1 - b)) & 1 for pb in per_player)
        blocks.append(GrolmuszTranscript(w, flag, bits))
        if not flag:
            for x in bits:
                out ^= x
    return GrolmuszResult(out, grolmusz_cost(k, n), tuple(blocks))


def grolmusz_block(m: InputMatrix) -> tuple[int, GrolmuszTranscript]:
    if m.k < 2:
        raise ProtocolError("Grolmusz protocol needs k >= 2")
    if m.n > block_capacity(m.k):
        raise ProtocolError(f"block of {m.n} columns exceeds capacity {block_capacity(m.k)}")
    res = _run(m.rows, m.k, m.n)
    return res.output, res.blocks[0]


def grolmusz(m: InputMatrix) -> GrolmuszResult:
    if m.k < 2:
        raise ProtocolError("Grolmusz protocol needs k >= 2")
    return _run(m.rows, m.k, m.n)


def grolmusz_rows(rows: Sequence[int], k: int, n: int) -> int:
    """Output bit only; for exhaustive sweeps."""
    msg = first_message(rows[1:], k, n)
    out = 0
    for i in range(2, k + 1):
        visible = list(rows)
        visible[i - 1] = None
        out ^= player_bits(i, visible, msg, k, n).bit_count()
    return out & 1


def _visible_from_view(view: ForeheadView) -> list[Optional[int]]:
    return [None if r == view.owner else view.row(r) for r in range(1, view.k + 1)]


def grolmusz_protocol(k: int, n: int) -> TwoRoundProtocol:
    """Grolmusz as a two-round protocol: player 1 first, the others answer its message."""
    if k < 2:
        raise ProtocolError("Grolmusz protocol needs k >= 2")
    nb = block_count(k, n)
    widths = (k * nb,) + (nb,) * (k - 1)

    def first(view: ForeheadView) -> int:
        return first_message(view.rows, k, n)

    def dependent(view: ForeheadView, msg: int) -> int:
        return player_bits(view.owner, _visible_from_view(view), msg, k, n)

    def referee(concat: int) -> int:
        parts = split_answers(concat, widths)
        flags = [flag for _, flag in decode_first_message(parts[0], k, n)]
        out = 0
        for b in range(nb):
            if flags[b]:
                continue
            for part in parts[1:]:
                out ^= (part >> (nb - 1 - b)) & 1
        return out

    return TwoRoundProtocol(k, n, 1, widths, first, (None,) + (dependent,) * (k - 1), referee,
                            f"grolmusz-k{k}-n{n}")


def build_quantum_gip(k: int, n: int) -> QuantumNOFProtocol:
    """ceil(k/2) quantum players: player 1 announces Grolmusz's first message,
    players (i, i+1) for i = 2, 4, ..., k-1 share one blackboard and apply
    (-1)^{A_j} phases; a +- measurement reads A_i xor A_{i+1} exactly.
    """
    if k < 3 or k % 2 == 0:
        raise ProtocolError("quantum GIP needs odd k >= 3; pad the input with all-ones rows (pad_to_k)")
    nb = block_count(k, n)

    def preamble(view: ForeheadView) -> int:
        return first_message(view.rows, k, n)

    def phase_bit(view: ForeheadView, msg: Optional[int]) -> int:
        return player_bits(view.owner, _visible_from_view(view), msg, k, n).bit_count() & 1

    half = Fraction(1, 2)
    players = tuple(QuantumPlayer(((i, half), (i + 1, half)), 1, phase_bit, phase=True)
                    for i in range(2, k, 2))
    measurements = tuple(plus_minus_measurement(i - 1, i) for i in range(2, k, 2))

    def combine(outcomes, msg):
        if all(flag for _, flag in decode_first_message(msg, k, n)):
            return 0
        out = 0
        for o in outcomes:
            out ^= o
        return out

    referee = ProductReferee(measurements, combine, "plus-minus")
    return QuantumNOFProtocol(k, n, players, referee, Preamble(1, k * nb, preamble), f"quantum-gip-k{k}-n{n}")
