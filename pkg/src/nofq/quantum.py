"""Quantum Number-on-the-Forehead engine.

Each quantum player owns one blackboard with registers
  A: referee workspace holding the view index j-1,
  B: the view P_j, encoded as (owner-1, visible rows),
  C: the answer register.
Blackboards are never entangled with each other, so every board is
simulated as its own StateVector and the referee combines per-board outcome
distributions classically.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .classical import SimultaneousProtocol, concat_answers
from .core import ForeheadView, InputMatrix, forehead_view
from .errors import ProtocolError
from .qstate import (POVM, TOL, RegisterLayout, StateVector, apply_basis_map, apply_povm,
                     computational_basis, measure_projective, mixture, partial_trace,
                     plus_minus_basis, trace_distance)

AnswerFn = Callable[[ForeheadView, Optional[int]], int]
BoardMeasurement = Callable[[StateVector, Optional[int]], Mapping[int, float]]


def index_width(k: int) -> int:
    return max(1, math.ceil(math.log2(k)))


def encode_view(view: ForeheadView, k: int) -> int:
    return ((view.owner - 1) << ((k - 1) * view.n)) | view.key


def decode_view(label: int, k: int, n: int) -> ForeheadView:
    shift = (k - 1) * n
    return ForeheadView.from_key((label >> shift) + 1, k, n, label & ((1 << shift) - 1))


@dataclass(frozen=True)
class QuantumPlayer:
    """Input distribution over views {(j, p_j)} and the answer written on each branch.

    With ``phase=True`` the answer bit is applied as (-1)^answer and the
    one-qubit answer register stays |0>.
    """

    distribution: tuple[tuple[int, Fraction], ...]
    answer_width: int
    answer: AnswerFn
    phase: bool = False

    @property
    def register_width(self) -> int:
        return 1 if self.phase else max(1, self.answer_width)

    def validate(self, k: int) -> None:
        total = Fraction(0)
        seen = set()
        for j, p in self.distribution:
            if not 1 <= j <= k:
                raise ProtocolError(f"view index {j} out of range 1..{k}")
            if j in seen:
                raise ProtocolError(f"view {j} listed twice")
            if p < 0:
                raise ProtocolError(f"negative probability {p}")
            seen.add(j)
            total += Fraction(p)
        if total != 1:
            raise ProtocolError(f"input distribution sums to {total}, not 1")


@dataclass(frozen=True)
class Preamble:
    """Classical first-round message written by a player holding a fixed view."""

    speaker: int
    width: int
    message: Callable[[ForeheadView], int]


@dataclass(frozen=True)
class ProductReferee:
    """Measure each board independently, then combine the outcomes classically."""

    measurements: tuple[BoardMeasurement, ...]
    combine: Callable[[tuple[int, ...], Optional[int]], int]
    kind: str = "product"

    def distribution(self, states: Sequence[StateVector], preamble: Optional[int]) -> np.ndarray:
        if len(states) != len(self.measurements):
            raise ProtocolError(f"referee expects {len(self.measurements)} boards, got {len(states)}")
        per_board = [sorted(meas(s, preamble).items()) for meas, s in zip(self.measurements, states)]
        out = np.zeros(2)
        for combo in itertools.product(*per_board):
            prob = 1.0
            for _, p in combo:
                prob *= p
            if prob <= 0:
                continue
            bit = self.combine(tuple(o for o, _ in combo), preamble)
            if bit not in (0, 1):
                raise ProtocolError(f"referee produced non-bit output {bit}")
            out[bit] += prob
        return out


@dataclass(frozen=True)
class QuantumNOFProtocol:
    k: int
    n: int
    players: tuple[QuantumPlayer, ...]
    referee: ProductReferee
    preamble: Optional[Preamble] = None
    name: str = "quantum"

    def __post_init__(self):
        for p in self.players:
            p.validate(self.k)

    @property
    def num_players(self) -> int:
        return len(self.players) + (1 if self.preamble else 0)

    def layout(self, i: int) -> RegisterLayout:
        player = self.players[i - 1]
        return RegisterLayout((("A", index_width(self.k)),
                               ("B", index_width(self.k) + (self.k - 1) * self.n),
                               ("C", player.register_width)))


def prepare_input(q: QuantumNOFProtocol, i: int, m: InputMatrix) -> StateVector:
    """sum_j sqrt(p_j) |j>_A |P_j>_B |0>_C for quantum player i (1-based)."""
    if m.k != q.k or m.n != q.n:
        raise ProtocolError(f"protocol is for {q.k}x{q.n} inputs, got {m.k}x{m.n}")
    player = q.players[i - 1]
    player.validate(q.k)
    amps = {(j - 1, encode_view(forehead_view(m, j), q.k), 0): math.sqrt(p)
            for j, p in player.distribution if p}
    return StateVector(q.layout(i), amps)


def player_step(state: StateVector, player: QuantumPlayer, k: int, n: int,
                preamble: Optional[int] = None) -> StateVector:
    """|P_j>_B |0>_C -> |P_j>_B |Q_j>_C (or a (-1)^Q_j phase), controlled on B only."""
    def step(label):
        a, b, c = label
        if c != 0:
            raise ProtocolError("answer register is not cleared")
        ans = player.answer(decode_view(b, k, n), preamble)
        if player.phase:
            if ans not in (0, 1):
                raise ProtocolError(f"phase answer must be a bit, got {ans}")
            return (a, b, c), (-1.0) ** ans
        if not 0 <= ans < (1 << player.answer_width) and not (player.answer_width == 0 and ans == 0):
            raise ProtocolError(f"answer {ans} does not fit {player.answer_width} bits")
        return (a, b, ans), 1.0
    return apply_basis_map(state, step)


def erase_inputs(state: StateVector, q: QuantumNOFProtocol, m: InputMatrix) -> StateVector:
    """Apply T^-1: |j>|P_j> -> |j>|0>, then drop the cleared B register."""
    expected = {j: encode_view(forehead_view(m, j + 1), q.k) for j in range(q.k)}
    amps = {}
    for (a, b, c), amp in state.amplitudes.items():
        if expected.get(a) != b:
            raise ProtocolError(f"branch |{a + 1}> holds a view other than P_{a + 1}: cannot erase")
        amps[(a, c)] = amp
    return StateVector(state.layout.without(["B"]), amps)


def preamble_message(q: QuantumNOFProtocol, m: InputMatrix) -> Optional[int]:
    if q.preamble is None:
        return None
    msg = q.preamble.message(forehead_view(m, q.preamble.speaker))
    if not 0 <= msg < (1 << q.preamble.width):
        raise ProtocolError(f"preamble {msg} does not fit {q.preamble.width} bits")
    return msg


def erased_states(q: QuantumNOFProtocol, m: InputMatrix) -> tuple[list[StateVector], Optional[int]]:
    pre = preamble_message(q, m)
    states = []
    for i, player in enumerate(q.players, 1):
        s = prepare_input(q, i, m)
        s = player_step(s, player, q.k, q.n, pre)
        states.append(erase_inputs(s, q, m))
    return states, pre


def run_quantum(q: QuantumNOFProtocol, m: InputMatrix) -> np.ndarray:
    """Exact output distribution [Pr(0), Pr(1)]."""
    states, pre = erased_states(q, m)
    dist = q.referee.distribution(states, pre)
    if dist.min() < -TOL or abs(dist.sum() - 1) > TOL:
        raise ProtocolError(f"referee output distribution {dist} is not a distribution")
    return dist


def to_dyadic(p: float, bits: int = 40, atol: float = 1e-9) -> Fraction:
    """Snap a float known to be a dyadic rational with denominator <= 2^bits."""
    snapped = Fraction(round(p * (1 << bits)), 1 << bits)
    if abs(float(snapped) - p) > atol:
        raise ValueError(f"{p} is not within {atol} of a dyadic rational")
    return snapped


def exact_success(q: QuantumNOFProtocol, m: InputMatrix, target: int, bits: int = 40) -> Fraction:
    """Pr[output = target] as an exact rational. Protocol amplitudes here are
    dyadic multiples of powers of 1/sqrt2, so the probabilities are dyadic."""
    return to_dyadic(float(run_quantum(q, m)[target]), bits)


@dataclass(frozen=True)
class LegalityReport:
    passed: bool
    checked: int
    witness: Optional[dict] = None


def validate_legality(q: QuantumNOFProtocol, matrices: Sequence[InputMatrix],
                      prepare: Callable[[QuantumNOFProtocol, int, InputMatrix], StateVector] = prepare_input,
                      atol: float = TOL) -> LegalityReport:
    """Each player's reduced input state must be the declared mixture of classical views."""
    checked = 0
    for m in matrices:
        for i, player in enumerate(q.players, 1):
            rho = partial_trace(prepare(q, i, m), ["B"])
            sigma = mixture(["B"], ((float(p), (encode_view(forehead_view(m, j), q.k),))
                                    for j, p in player.distribution if p))
            dist = trace_distance(rho, sigma)
            checked += 1
            if dist > atol:
                return LegalityReport(False, checked, {"player": i, "matrix": m.format().split(),
                                                       "trace_distance": dist})
    return LegalityReport(True, checked)


@dataclass(frozen=True)
class QCostReport:
    answer_qubits: int
    workspace_qubits: int
    classical_bits: int
    simulated_bits: int  # preamble plus one answer per simulated classical player

    @property
    def with_workspace(self) -> int:
        return self.answer_qubits + self.workspace_qubits


def qcost(q: QuantumNOFProtocol) -> QCostReport:
    answer = sum(p.answer_width for p in q.players)
    workspace = index_width(q.k) * len(q.players)
    classical = q.preamble.width if q.preamble else 0
    simulated = classical + sum(p.answer_width * sum(1 for _, pr in p.distribution if pr) for p in q.players)
    return QCostReport(answer, workspace, classical, simulated)


# -- referee building blocks -------------------------------------------------

def computational_measurement(state: StateVector, preamble: Optional[int] = None) -> dict[int, float]:
    """Read the answer register C in the computational basis."""
    meas = measure_projective(state, ["C"], computational_basis(state.layout.dim(["C"])))
    return {o: float(p) for o, p in enumerate(meas.probabilities) if p > 1e-15}


def plus_minus_measurement(low: int, high: int) -> BoardMeasurement:
    """Measure A in {(|low> +- |high>)/sqrt2}; outcome 0 is '+', 1 is '-'."""
    def measure(state: StateVector, preamble: Optional[int] = None) -> dict[int, float]:
        basis = plus_minus_basis(state.layout.width("A"), low, high)
        meas = measure_projective(state, ["A"], basis)
        return {o: float(p) for o, p in enumerate(meas.probabilities) if p > 1e-15}
    return measure


def povm_measurement(povm: POVM, registers: Sequence[str] = ("A", "C")) -> BoardMeasurement:
    def measure(state: StateVector, preamble: Optional[int] = None) -> dict[int, float]:
        probs = apply_povm(state, povm, registers)
        return {o: float(p) for o, p in enumerate(probs) if p > 1e-15}
    return measure


def povm_referee(povms: Sequence[POVM], combine, registers: Sequence[str] = ("A", "C")) -> ProductReferee:
    return ProductReferee(tuple(povm_measurement(p, registers) for p in povms), combine, "povm")


def from_classical(p: SimultaneousProtocol) -> QuantumNOFProtocol:
    """Point-distribution embedding: quantum player i is classical player i."""
    players = tuple(QuantumPlayer(((i, Fraction(1)),), w, (lambda v, pre, _m=amap: _m(v)))
                    for i, (amap, w) in enumerate(zip(p.answer_maps, p.widths), 1))
    widths = p.widths

    def combine(outcomes, preamble):
        return p.referee(concat_answers(outcomes, widths)) & 1

    referee = ProductReferee(tuple(computational_measurement for _ in players), combine, "classical")
    return QuantumNOFProtocol(p.k, p.n, players, referee, name=p.name + "-quantum")
