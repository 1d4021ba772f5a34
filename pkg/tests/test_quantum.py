import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nofq.classical import random_protocol, run_classical
from nofq.core import InputMatrix, all_matrices, forehead_view, gip_eval, random_matrix
from nofq.errors import ProtocolError
from nofq.gip import build_quantum_gip
from nofq.qstate import POVM, StateVector, mixture, partial_trace, trace_distance
from nofq.quantum import (ProductReferee, QuantumNOFProtocol, QuantumPlayer, decode_view, encode_view,
                          erase_inputs, exact_success, from_classical, index_width, player_step, povm_referee,
                          prepare_input, qcost, run_quantum, to_dyadic, validate_legality)

R2 = 1 / math.sqrt(2)
HALF = Fraction(1, 2)


def first_bit(view, pre):
    return view.rows[0] & 1


def pair_protocol(k=3, n=2, i=1, width=1, answer=first_bit, phase=False):
    player = QuantumPlayer(((i, HALF), (i + 1, HALF)), width, answer, phase)
    referee = ProductReferee((lambda s, pre: {0: 1.0},), lambda o, pre: 0)
    return QuantumNOFProtocol(k, n, (player,), referee)


def test_view_encoding_roundtrip():
    m = InputMatrix(3, 2, (1, 2, 3))
    for j in range(1, 4):
        v = forehead_view(m, j)
        assert decode_view(encode_view(v, 3), 3, 2) == v
    assert index_width(2) == 1 and index_width(3) == 2 and index_width(5) == 3


def test_prepare_point_distribution():
    m = InputMatrix(3, 2, (1, 2, 3))
    player = QuantumPlayer(((2, Fraction(1)),), 1, first_bit)
    q = QuantumNOFProtocol(3, 2, (player,), ProductReferee((lambda s, p: {0: 1.0},), lambda o, p: 0))
    s = prepare_input(q, 1, m)
    assert s.amplitudes == {(1, encode_view(forehead_view(m, 2), 3), 0): 1.0}


def test_prepare_uniform_pair():
    m = InputMatrix(3, 2, (1, 2, 3))
    q = pair_protocol()
    s = prepare_input(q, 1, m)
    expect = StateVector(q.layout(1), {(0, encode_view(forehead_view(m, 1), 3), 0): R2,
                                        (1, encode_view(forehead_view(m, 2), 3), 0): R2})
    assert s.isclose(expect)
    rho = partial_trace(s, ["B"])
    sigma = mixture(["B"], [(0.5, (encode_view(forehead_view(m, 1), 3),)),
                            (0.5, (encode_view(forehead_view(m, 2), 3),))])
    assert trace_distance(rho, sigma) < 1e-12


def test_step_and_erase_pair():
    m = InputMatrix(3, 2, (0b01, 0b10, 0b11))
    q = pair_protocol(width=2, answer=lambda v, pre: v.rows[0])
    s = erase_inputs(player_step(prepare_input(q, 1, m), q.players[0], 3, 2), q, m)
    # player 1 sees row 2 first, player 2 sees row 1 first
    assert s.isclose(StateVector(s.layout, {(0, 0b10): R2, (1, 0b01): R2}))


def test_erase_without_step():
    m = InputMatrix(3, 2, (0, 1, 2))
    q = pair_protocol()
    s = erase_inputs(prepare_input(q, 1, m), q, m)
    assert s.isclose(StateVector(s.layout, {(0, 0): R2, (1, 0): R2}))


@pytest.mark.parametrize("a,b", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_phase_variant_pair(a, b):
    m = InputMatrix(3, 1, (0, 0, 0))
    q = pair_protocol(n=1, answer=lambda v, pre: a if v.owner == 1 else b, phase=True)
    s = erase_inputs(player_step(prepare_input(q, 1, m), q.players[0], 3, 1), q, m)
    assert s.isclose(StateVector(s.layout, {(0, 0): (-1) ** a * R2, (1, 0): (-1) ** b * R2}))


def test_erase_detects_foreign_view():
    m = InputMatrix(3, 1, (0, 1, 0))
    other = InputMatrix(3, 1, (1, 1, 1))
    q = pair_protocol(n=1)
    with pytest.raises(ProtocolError):
        erase_inputs(prepare_input(q, 1, m), q, other)


def test_step_requires_clear_answer_register():
    m = InputMatrix(3, 1, (0, 1, 0))
    q = pair_protocol(n=1)
    s = player_step(prepare_input(q, 1, m), QuantumPlayer(((1, HALF), (2, HALF)), 1, lambda v, p: 1), 3, 1)
    with pytest.raises(ProtocolError):
        player_step(s, q.players[0], 3, 1)


def test_distribution_validation():
    with pytest.raises(ProtocolError):
        pair_protocol(i=3)  # view 4 does not exist for k=3
    bad = QuantumPlayer(((1, Fraction(1, 3)), (2, Fraction(1, 3))), 1, first_bit)
    with pytest.raises(ProtocolError):
        bad.validate(3)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_point_distribution_reproduces_classical(seed):
    rng = np.random.default_rng(seed)
    p = random_protocol(3, 2, (1, 2, 1), rng)
    q = from_classical(p)
    for m in all_matrices(3, 2):
        dist = run_quantum(q, m)
        assert dist[run_classical(p, m)[0]] == pytest.approx(1, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 7), st.integers(1, 3))
def test_random_distributions_run(seed, weight, width):
    rng = np.random.default_rng(seed)
    k, n = 4, 2
    views = rng.choice(np.arange(1, k + 1), size=2, replace=False)
    dist = ((int(views[0]), Fraction(weight, 8)), (int(views[1]), Fraction(8 - weight, 8)))
    table = rng.integers(0, 1 << width, size=1 << (k * n + 2))
    player = QuantumPlayer(dist, width, lambda v, pre: int(table[encode_view(v, k)]))
    q = QuantumNOFProtocol(k, n, (player,), povm_referee([POVM([np.eye(1 << (2 + width)) / 2] * 2)],
                                                         lambda o, pre: o[0]))
    m = random_matrix(k, n, rng)
    out = run_quantum(q, m)
    assert abs(out.sum() - 1) <= 1e-9
    assert validate_legality(q, [m]).passed


def test_half_half_povm_referee():
    q = pair_protocol(width=1)
    half = POVM([np.eye(8) / 2, np.eye(8) / 2])  # A has 2 qubits for k=3
    q = QuantumNOFProtocol(q.k, q.n, q.players, povm_referee([half], lambda o, pre: o[0]))
    for m in all_matrices(3, 2):
        assert np.allclose(run_quantum(q, m), [0.5, 0.5])


def test_quantum_gip_small_exhaustive():
    q = build_quantum_gip(3, 3)
    for m in all_matrices(3, 3):
        assert run_quantum(q, m)[gip_eval(m)] >= 1 - 1e-9


def test_legality_passes_for_constructed():
    ms = list(all_matrices(3, 2))
    assert validate_legality(pair_protocol(), ms).passed
    assert validate_legality(build_quantum_gip(3, 2), ms).passed
    rng = np.random.default_rng(0)
    assert validate_legality(from_classical(random_protocol(3, 2, (1, 1, 1), rng)), ms).passed


def test_superposed_views_are_illegal():
    q = pair_protocol(k=3, n=2)

    def coherent(q, i, m):
        # sum_j |P_j> with no index register recording j
        amps = {(0, encode_view(forehead_view(m, j), q.k), 0): 1 / math.sqrt(q.k) for j in range(1, q.k + 1)}
        return StateVector(q.layout(i), amps)

    rep = validate_legality(q, [InputMatrix(3, 2, (1, 2, 3))], prepare=coherent)
    assert not rep.passed
    assert rep.witness["player"] == 1 and rep.witness["trace_distance"] > 0.1


def test_qcost():
    q = pair_protocol(width=1)
    c = qcost(q)
    assert c.answer_qubits == 1 and c.classical_bits == 0
    assert c.with_workspace == 1 + index_width(3)
    for k in (3, 5, 7, 9):
        n = (1 << (k - 1)) - 1
        g = qcost(build_quantum_gip(k, n))
        assert g.classical_bits == k and g.answer_qubits == (k - 1) // 2
        assert g.answer_qubits + g.classical_bits <= 2 * k - 1
        assert g.simulated_bits == 2 * k - 1


def test_to_dyadic():
    assert to_dyadic(0.5625) == Fraction(9, 16)
    assert to_dyadic(0.5 + 2 ** -30) == HALF + Fraction(1, 2 ** 30)
    with pytest.raises(ValueError):
        to_dyadic(1 / 3, bits=8)


def test_exact_success_is_rational():
    q = build_quantum_gip(3, 2)
    m = InputMatrix(3, 2, (3, 3, 1))
    assert exact_success(q, m, gip_eval(m)) == 1
