"""Exact Fourier analysis of referee functions and parity-referee extraction.

Bits map to signs via b -> (-1)^b. Subsets of the C answer positions are
packed ints in the same layout as the concatenated answers, so the character
chi_S(a) is (-1)^popcount(S & a).
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .classical import SimultaneousProtocol, check_cap, concat_answers, split_answers
from .core import all_matrices, forehead_view
from .errors import CapExceeded, ProtocolError

ARITY_CAP = 24


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalized transform: out[S] = sum_a values[a] * (-1)^{|S & a|}. Exact on int64."""
    a = np.array(values, dtype=np.int64)
    size = a.shape[0]
    if size & (size - 1):
        raise ValueError("length must be a power of two")
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        x = a[:, 0, :].copy()
        y = a[:, 1, :]
        a[:, 0, :] += y
        a[:, 1, :] = x - y
        a = a.reshape(-1)
        h *= 2
    return a


@dataclass(frozen=True)
class FourierTable:
    """Coefficients stored as integer numerators over the common denominator 2^C."""

    arity: int
    numerators: np.ndarray

    def coefficient(self, subset: int) -> Fraction:
        return Fraction(int(self.numerators[subset]), 1 << self.arity)

    def coefficients(self) -> list[Fraction]:
        return [self.coefficient(s) for s in range(1 << self.arity)]


def fourier_transform(table: Sequence[int]) -> FourierTable:
    table = np.asarray(table, dtype=np.int64)
    size = table.shape[0]
    arity = size.bit_length() - 1
    if size != 1 << arity:
        raise ValueError("truth table length must be a power of two")
    if arity > ARITY_CAP:
        raise CapExceeded(f"arity {arity} exceeds cap {ARITY_CAP}")
    signs = 1 - 2 * (table & 1)
    return FourierTable(arity, walsh_hadamard(signs))


def inverse_transform(ft: FourierTable) -> np.ndarray:
    values = walsh_hadamard(ft.numerators)
    scale = 1 << ft.arity
    if np.any(values % scale):
        raise ValueError("coefficients do not describe a +-1 valued function")
    signs = values // scale
    if not np.all(np.abs(signs) == 1):
        raise ValueError("coefficients do not describe a +-1 valued function")
    return ((1 - signs) // 2).astype(np.int8)


@dataclass(frozen=True)
class ParityReferee:
    """XOR of a subset of each player's answer bits, optionally negated."""

    subsets: tuple[int, ...]
    negate: bool = False

    def validate(self, widths: Sequence[int]) -> None:
        if len(self.subsets) != len(widths):
            raise ProtocolError("need one subset per player")
        for i, (s, w) in enumerate(zip(self.subsets, widths), 1):
            if not 0 <= s < (1 << w):
                raise ProtocolError(f"subset for player {i} exceeds its {w} answer bits")

    def mask(self, widths: Sequence[int]) -> int:
        return concat_answers(self.subsets, widths)

    def parity(self, answers: Sequence[int]) -> int:
        out = int(self.negate)
        for s, a in zip(self.subsets, answers):
            out ^= (s & a).bit_count() & 1
        return out

    def __call__(self, concat: int, widths: Sequence[int]) -> int:
        return self.parity(split_answers(concat, widths))


def parity_protocol(p: SimultaneousProtocol, parity: ParityReferee) -> SimultaneousProtocol:
    parity.validate(p.widths)
    widths = p.widths
    return SimultaneousProtocol(p.k, p.n, widths, p.answer_maps,
                                lambda concat: parity(concat, widths), p.name + "-parity")


@dataclass(frozen=True)
class Extraction:
    parity: ParityReferee
    correlation: Fraction  # E_x[(-1)^{parity before negation} (-1)^{f(x)}]
    protocol: SimultaneousProtocol


def answer_sign_histogram(p: SimultaneousProtocol, f) -> tuple[np.ndarray, int]:
    """hist[a] = sum over inputs x with answers a of (-1)^{f(x)}; also returns the input count."""
    check_cap(p.k, p.n)
    c = sum(p.widths)
    if c > ARITY_CAP:
        raise CapExceeded(f"communication {c} exceeds the arity cap {ARITY_CAP}")
    hist = np.zeros(1 << c, dtype=np.int64)
    count = 0
    for m in all_matrices(p.k, p.n):
        answers = [amap(forehead_view(m, i)) for i, amap in enumerate(p.answer_maps, 1)]
        hist[concat_answers(answers, p.widths)] += 1 - 2 * (f(m) & 1)
        count += 1
    return hist, count


def extract_parity_referee(p: SimultaneousProtocol, f) -> Extraction:
    """Parity referee with the largest |correlation| to f; ties go to the smallest subset family.

    The derived protocol negates its output when the correlation is negative,
    so its average success is 1/2 + |correlation|/2.
    """
    hist, count = answer_sign_histogram(p, f)
    spectrum = walsh_hadamard(hist)
    best = int(np.argmax(np.abs(spectrum)))
    corr = Fraction(int(spectrum[best]), count)
    parity = ParityReferee(split_answers(best, p.widths), negate=corr < 0)
    return Extraction(parity, corr, parity_protocol(p, parity))


def correlation_spectrum(p: SimultaneousProtocol, f) -> list[Fraction]:
    """E_x[chi_S(answers) (-1)^f] for every subset family S."""
    hist, count = answer_sign_histogram(p, f)
    return [Fraction(int(v), count) for v in walsh_hadamard(hist)]
