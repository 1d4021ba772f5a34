"""Compile a k-player classical protocol with a parity referee into ceil(k/2) quantum players.

Quantum player p holds the uniform superposition over the views of classical
players 2p-1 and 2p and answers exactly as they would. The referee decodes
each pair's parity S_i.A_i xor S_{i+1}.A_{i+1} from one copy of
(|i>|A_i> + |i+1>|A_{i+1}>)/sqrt2 and XORs the pair guesses.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .classical import SimultaneousProtocol, correctness_exhaustive, cost
from .core import all_matrices
from .errors import ProtocolError
from .fourier import Extraction, ParityReferee, extract_parity_referee
from .qstate import StateVector, apply_basis_map, measure_fourier_basis
from .quantum import (ProductReferee, QuantumNOFProtocol, QuantumPlayer, computational_measurement,
                      exact_success, qcost)

HALF = Fraction(1, 2)


@dataclass(frozen=True)
class PairDecodeResult:
    distribution: np.ndarray  # [Pr(guess 0), Pr(guess 1)]
    target: int               # S_low.A_low xor S_high.A_high, read off the simulated state
    success: float


def _branch_answers(state: StateVector, low: int, high: int) -> dict[int, int]:
    answers = {}
    for (a, c), amp in state.amplitudes.items():
        if a not in (low, high) or a in answers:
            raise ProtocolError(f"not a two-branch pair state on |{low}>, |{high}>")
        answers[a] = c
    if set(answers) != {low, high}:
        raise ProtocolError("pair state must have both branches")
    return answers


def pair_decode(state: StateVector, s_low: int, s_high: int, low: int = 0, high: int = 1) -> PairDecodeResult:
    """Single-copy decoder for the parity of a pair's answers.

    Phase branch |low> by (-1)^{S_low.A_low} and |high> by (-1)^{S_high.A_high},
    measure the answer register in the character basis to get T, then:
    T = 0 leaves ((-1)^{target}-signed) |low>+|high>, read exactly in the
    +- basis; any other T gives a uniformly random guess. Success is
    1/2 + 2^-(t+1) on every input, so the bias does not depend on the answers.
    """
    answers = _branch_answers(state, low, high)
    target = ((s_low & answers[low]).bit_count() ^ (s_high & answers[high]).bit_count()) & 1

    def phase(label):
        a, c = label
        s = s_low if a == low else s_high
        return label, -1.0 if (s & c).bit_count() & 1 else 1.0

    phased = apply_basis_map(state, phase)
    if phased.layout.names != ("A", "C"):
        raise ProtocolError("pair state must have registers (A, C)")
    fourier = measure_fourier_basis(phased, "C")
    # The +- measurement acts on A only, so after T = 0 its statistics come
    # straight from the projected amplitudes <chi_0|psi> over A.
    rest = fourier.rest_amplitudes(0)
    a_low, a_high = rest.get((low,), 0j), rest.get((high,), 0j)
    p_zero = fourier.probabilities[0]
    dist = np.array([abs(a_low + a_high) ** 2 / 2, abs(a_low - a_high) ** 2 / 2])
    dist += (1 - p_zero) * 0.5
    return PairDecodeResult(dist, target, float(dist[target]))


def pair_measurement(s_low: int, s_high: int, low: int, high: int):
    def measure(state: StateVector, preamble: Optional[int] = None) -> dict[int, float]:
        d = pair_decode(state, s_low, s_high, low, high).distribution
        return {o: float(p) for o, p in enumerate(d) if p > 1e-15}
    return measure


def _known_zero(state: StateVector, preamble: Optional[int] = None) -> dict[int, float]:
    return {0: 1.0}


def single_parity_measurement(subset: int):
    def measure(state: StateVector, preamble: Optional[int] = None) -> dict[int, float]:
        out: dict[int, float] = {}
        for c, p in computational_measurement(state).items():
            bit = (subset & c).bit_count() & 1
            out[bit] = out.get(bit, 0.0) + p
        return out
    return measure


def xor_combine(guesses: Sequence[int], biases: Sequence[Fraction]) -> tuple[int, Fraction]:
    """XOR of independent guesses; each is right with prob 1/2 + bias.

    Returns the combined guess and its success probability 1/2 + 2^{m-1} * prod(bias).
    """
    if len(guesses) != len(biases):
        raise ValueError("one bias per guess")
    guess = 0
    for g in guesses:
        guess ^= g & 1
    prod = Fraction(1)
    for b in biases:
        prod *= Fraction(b)
    if not biases:
        return guess, Fraction(1)
    return guess, HALF + (1 << (len(biases) - 1)) * prod


def pair_bias(t: int) -> Fraction:
    """Bias of the single-copy pair decoder on t-bit answers."""
    return Fraction(1, 1 << (t + 1))


@dataclass(frozen=True)
class CompiledProtocol:
    source: SimultaneousProtocol
    parity: ParityReferee
    pairs: tuple[tuple[int, ...], ...]  # (i, i+1), or (k,) for the unpaired last player of odd k
    widths: tuple[int, ...]             # answer register width per quantum player
    quantum: QuantumNOFProtocol


def compile_protocol(src: SimultaneousProtocol, parity: ParityReferee) -> CompiledProtocol:
    parity.validate(src.widths)
    k = src.k
    groups = [(i, i + 1) for i in range(1, k, 2)]
    if k % 2:
        groups.append((k,))

    def answer(view, preamble):
        return src.answer_maps[view.owner - 1](view)

    players = []
    measurements = []
    widths = []
    for g in groups:
        if len(g) == 2:
            i, j = g
            t = max(src.widths[i - 1], src.widths[j - 1])
            players.append(QuantumPlayer(((i, HALF), (j, HALF)), t, answer))
            s_i, s_j = parity.subsets[i - 1], parity.subsets[j - 1]
            # both subsets empty: the pair parity is 0 whatever the answers, no need to guess
            measurements.append(pair_measurement(s_i, s_j, i - 1, j - 1) if s_i or s_j else _known_zero)
        else:
            (i,) = g
            t = src.widths[i - 1]
            players.append(QuantumPlayer(((i, Fraction(1)),), t, answer))
            measurements.append(single_parity_measurement(parity.subsets[i - 1]))
        widths.append(t)

    negate = int(parity.negate)

    def combine(outcomes, preamble):
        out = negate
        for o in outcomes:
            out ^= o
        return out

    referee = ProductReferee(tuple(measurements), combine, "pair-decoder")
    q = QuantumNOFProtocol(k, src.n, tuple(players), referee, name=src.name + "-compiled")
    return CompiledProtocol(src, parity, tuple(groups), tuple(widths), q)


def bound_satisfied(measured: Fraction, delta: Fraction, c: int) -> bool:
    """Exact test of measured >= 1/2 + delta / 2^{3C/2}, including odd 3C."""
    lhs = measured - HALF
    if (3 * c) % 2 == 0:
        return lhs >= delta / (1 << (3 * c // 2))
    r = delta / (1 << ((3 * c + 1) // 2))  # rhs = r * sqrt(2)
    if r >= 0:
        return lhs >= 0 and lhs * lhs >= 2 * r * r
    return lhs >= 0 or lhs * lhs <= 2 * r * r


def bound_value(delta: Fraction, c: int) -> tuple[str, float]:
    if (3 * c) % 2 == 0:
        b = HALF + delta / (1 << (3 * c // 2))
        return str(b), float(b)
    r = delta / (1 << ((3 * c + 1) // 2))
    return f"1/2 + {r}*sqrt(2)", 0.5 + float(r) * math.sqrt(2)


@dataclass(frozen=True)
class SimulationReport:
    k: int
    n: int
    communication: int
    delta: Fraction
    extraction: Extraction
    answer_qubits: int
    simulated_bits: int
    measured: Fraction
    worst: Fraction
    bound_exact: str
    bound: float
    holds: bool

    def to_json(self) -> dict:
        return {
            "k": self.k, "n": self.n, "C": self.communication,
            "delta": str(self.delta),
            "subsets": list(self.extraction.parity.subsets),
            "negate": self.extraction.parity.negate,
            "correlation": str(self.extraction.correlation),
            "answer_qubits": self.answer_qubits,
            "simulated_bits": self.simulated_bits,
            "bound": self.bound_exact, "bound_float": self.bound,
            "measured": str(self.measured), "measured_float": float(self.measured),
            "worst": str(self.worst),
            "holds": self.holds,
        }


def compiled_average_success(compiled: CompiledProtocol, f) -> tuple[Fraction, Fraction]:
    """Exact (average, worst) success of the compiled protocol over all inputs."""
    src = compiled.source
    total = Fraction(0)
    worst = Fraction(1)
    count = 0
    for m in all_matrices(src.k, src.n):
        s = exact_success(compiled.quantum, m, f(m) & 1)
        total += s
        worst = min(worst, s)
        count += 1
    return total / count, worst


def verify_theorem1(src: SimultaneousProtocol, f) -> SimulationReport:
    report = correctness_exhaustive(src, f)
    delta = report.delta
    extraction = extract_parity_referee(src, f)
    compiled = compile_protocol(src, extraction.parity)
    measured, worst = compiled_average_success(compiled, f)
    c = cost(src)
    bound_exact, bound_float = bound_value(delta, c)
    qc = qcost(compiled.quantum)
    return SimulationReport(src.k, src.n, c, delta, extraction, qc.answer_qubits, qc.simulated_bits,
                          measured, worst, bound_exact, bound_float, bound_satisfied(measured, delta, c))
