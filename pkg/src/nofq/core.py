"""Boolean input matrices, forehead views, GIP and the all-ones padding reduction.

Rows are stored as packed Python ints with column 1 in the most significant
position, so the textual row ``"101"`` is the integer ``0b101``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import ProtocolError, SpecFormatError


@dataclass(frozen=True)
class InputMatrix:
    """k x n boolean matrix; row i is the input x_i of player i (1-based)."""

    k: int
    n: int
    rows: tuple[int, ...]

    def __post_init__(self):
        if self.k < 1 or self.n < 1:
            raise ValueError(f"need k >= 1 and n >= 1, got k={self.k}, n={self.n}")
        if len(self.rows) != self.k:
            raise ValueError(f"expected {self.k} rows, got {len(self.rows)}")
        limit = 1 << self.n
        for r in self.rows:
            if not 0 <= r < limit:
                raise ValueError(f"row value {r} does not fit in {self.n} bits")

    @classmethod
    def from_bits(cls, bits: Sequence[Sequence[int]]) -> "InputMatrix":
        if not bits:
            raise ValueError("matrix needs at least one row")
        n = len(bits[0])
        rows = []
        for row in bits:
            if len(row) != n:
                raise ValueError("ragged rows")
            value = 0
            for b in row:
                value = (value << 1) | (1 if b else 0)
            rows.append(value)
        return cls(len(bits), n, tuple(rows))

    @classmethod
    def parse(cls, text: str) -> "InputMatrix":
        """Parse k lines of n characters from {0,1}. Blank lines are ignored."""
        lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
        if not lines:
            raise SpecFormatError("empty matrix text")
        n = len(lines[0])
        for lineno, ln in enumerate(lines, 1):
            if len(ln) != n:
                raise SpecFormatError(f"line {lineno}: expected {n} bits, got {len(ln)} (ragged matrix)")
            if set(ln) - {"0", "1"}:
                raise SpecFormatError(f"line {lineno}: only '0' and '1' are allowed")
        return cls(len(lines), n, tuple(int(ln, 2) for ln in lines))

    def format(self) -> str:
        return "\n".join(format(r, f"0{self.n}b") for r in self.rows) + "\n"

    def bit(self, i: int, j: int) -> int:
        """Entry X_i^j with 1-based row i and column j."""
        return (self.rows[i - 1] >> (self.n - j)) & 1

    def to_array(self) -> np.ndarray:
        return np.array([[self.bit(i, j) for j in range(1, self.n + 1)]
                         for i in range(1, self.k + 1)], dtype=np.uint8)

    def permute_columns(self, perm: Sequence[int]) -> "InputMatrix":
        """Column j of the result is column perm[j-1] of self (both 1-based)."""
        bits = [[self.bit(i, p) for p in perm] for i in range(1, self.k + 1)]
        return InputMatrix.from_bits(bits)


@dataclass(frozen=True)
class ForeheadView:
    """What player ``owner`` sees: every row except its own, ascending."""

    owner: int
    n: int
    rows: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.rows) + 1

    def row(self, i: int) -> int:
        """Row i of the underlying matrix (1-based); the owner's row is hidden."""
        if i == self.owner:
            raise ProtocolError(f"player {self.owner} cannot see its own row")
        return self.rows[i - 1] if i < self.owner else self.rows[i - 2]

    @property
    def key(self) -> int:
        """Bit concatenation of the visible rows, first visible row most significant."""
        key = 0
        for r in self.rows:
            key = (key << self.n) | r
        return key

    @classmethod
    def from_key(cls, owner: int, k: int, n: int, key: int) -> "ForeheadView":
        mask = (1 << n) - 1
        rows = [(key >> (n * (k - 2 - idx))) & mask for idx in range(k - 1)]
        return cls(owner, n, tuple(rows))


def gip_eval(m: InputMatrix) -> int:
    """Parity of the number of all-ones columns."""
    acc = (1 << m.n) - 1
    for r in m.rows:
        acc &= r
    return acc.bit_count() & 1


def gip_rows(rows: Sequence[int]) -> int:
    """gip_eval on bare packed rows (hot loops skip the dataclass)."""
    acc = -1
    for r in rows:
        acc &= r
    return acc.bit_count() & 1


def forehead_view(m: InputMatrix, i: int) -> ForeheadView:
    if not 1 <= i <= m.k:
        raise IndexError(f"player index {i} out of range 1..{m.k}")
    return ForeheadView(i, m.n, m.rows[: i - 1] + m.rows[i:])


def pad_to_k(m: InputMatrix, k: int) -> InputMatrix:
    """Append all-ones rows up to k rows; GIP is unchanged."""
    if m.k > k:
        raise ValueError(f"cannot pad {m.k} rows down to {k}")
    ones = (1 << m.n) - 1
    return InputMatrix(k, m.n, m.rows + (ones,) * (k - m.k))


def all_matrices(k: int, n: int) -> Iterator[InputMatrix]:
    """Every k x n matrix, in row-major lexicographic order."""
    for rows in itertools.product(range(1 << n), repeat=k):
        yield InputMatrix(k, n, rows)


def random_matrix(k: int, n: int, rng: np.random.Generator) -> InputMatrix:
    return InputMatrix(k, n, tuple(random_rows(k, n, rng)))


def random_rows(k: int, n: int, rng: np.random.Generator) -> list[int]:
    # Draw in 32-bit chunks so n may exceed 63.
    rows = []
    for _ in range(k):
        value, remaining = 0, n
        while remaining > 0:
            take = min(32, remaining)
            value = (value << take) | int(rng.integers(0, 1 << take))
            remaining -= take
        rows.append(value)
    return rows
