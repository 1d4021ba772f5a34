import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nofq.errors import QuantumStateError
from nofq.qstate import (POVM, RegisterLayout, StateVector, apply_basis_map, apply_povm, basis_state,
                         character_basis, computational_basis, measure_fourier_basis, measure_projective,
                         mixture, partial_trace, plus_minus_basis, product_state, trace_distance)

R2 = 1 / math.sqrt(2)


def random_state(layout, rng, support=None):
    dim = layout.dim(layout.names)
    widths = [w for _, w in layout.registers]
    idx = rng.choice(dim, size=min(support or dim, dim), replace=False)
    amps = {}
    for i in idx:
        label, rest = [], int(i)
        for w in reversed(widths):
            label.append(rest & ((1 << w) - 1))
            rest >>= w
        amps[tuple(reversed(label))] = complex(rng.normal(), rng.normal())
    return StateVector(layout, amps, normalize=True)


def test_layout_validation():
    with pytest.raises(ValueError):
        RegisterLayout((("A", 1), ("A", 2)))
    with pytest.raises(ValueError):
        RegisterLayout.of(A=0)
    lay = RegisterLayout.of(A=1, B=3)
    assert lay.dim(["A", "B"]) == 16 and lay.without(["A"]).names == ("B",)


def test_norm_enforced():
    lay = RegisterLayout.of(A=1)
    with pytest.raises(QuantumStateError):
        StateVector(lay, {(0,): 1, (1,): 1})
    s = StateVector(lay, {(0,): 1, (1,): 1}, normalize=True)
    assert abs(s.amplitude((1,)) - R2) < 1e-12


def test_identity_map():
    s = random_state(RegisterLayout.of(A=2, C=2), np.random.default_rng(0))
    assert apply_basis_map(s, lambda lab: lab).isclose(s)


def test_input_writing_map():
    lay = RegisterLayout.of(A=2, B=3)
    views = {1: 0b101, 2: 0b011}
    s = StateVector(lay, {(1, 0): R2, (2, 0): R2})
    out = apply_basis_map(s, lambda lab: (lab[0], views[lab[0]]))
    assert out.isclose(StateVector(lay, {(1, 0b101): R2, (2, 0b011): R2}))


def test_phase_map_is_involution():
    s = random_state(RegisterLayout.of(A=1, C=2), np.random.default_rng(1))

    def phase(lab):
        return lab, -1.0 if lab[1] & 1 else 1.0

    assert apply_basis_map(apply_basis_map(s, phase), phase).isclose(s)


def test_non_injective_map_rejected():
    s = StateVector(RegisterLayout.of(A=1), {(0,): R2, (1,): R2})
    with pytest.raises(QuantumStateError):
        apply_basis_map(s, lambda lab: (0,))


def test_non_unit_phase_rejected():
    s = basis_state(RegisterLayout.of(A=1), (0,))
    with pytest.raises(QuantumStateError):
        apply_basis_map(s, lambda lab: (lab, 0.5))


@settings(max_examples=40)
@given(st.integers(0, 2 ** 32 - 1), st.integers(0, 3))
def test_norm_preserved_under_basis_maps(seed, shift):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout.of(A=2, C=3)
    s = random_state(lay, rng)
    angles = rng.uniform(0, 2 * math.pi, size=8)
    out = apply_basis_map(s, lambda lab: ((lab[0] ^ shift, lab[1]), np.exp(1j * angles[lab[1]])))
    assert abs(out.norm() - 1) <= 1e-9


def test_plus_state_reads_plus():
    lay = RegisterLayout.of(A=2)
    s = StateVector(lay, {(1,): R2, (2,): R2})
    m = measure_projective(s, ["A"], plus_minus_basis(2, 1, 2))
    assert abs(m.probabilities[0] - 1) < 1e-12


@pytest.mark.parametrize("a,b", [(0, 0), (0, 1), (1, 0), (1, 1)])
def test_pm_basis_reads_xor(a, b):
    lay = RegisterLayout.of(A=2)
    s = StateVector(lay, {(1,): (-1) ** a * R2, (2,): (-1) ** b * R2})
    m = measure_projective(s, ["A"], plus_minus_basis(2, 1, 2))
    assert abs(m.probabilities[a ^ b] - 1) < 1e-12


def test_uniform_two_qubits():
    lay = RegisterLayout.of(A=1, C=1)
    s = product_state(lay, [{0: 1, 1: 1}, {0: 1, 1: 1}])
    m = measure_projective(s, ["A", "C"], computational_basis(4))
    assert np.allclose(m.probabilities, 0.25)


def test_non_orthonormal_basis_rejected():
    s = basis_state(RegisterLayout.of(A=1), (0,))
    with pytest.raises(QuantumStateError):
        measure_projective(s, ["A"], np.array([[1, 0], [1, 0]]))


def test_collapse_renormalizes():
    lay = RegisterLayout.of(A=1, C=1)
    s = StateVector(lay, {(0, 0): R2, (1, 1): R2})
    post = measure_projective(s, ["A"], computational_basis(2)).collapse(1)
    assert post.isclose(basis_state(lay, (1, 1)))


@pytest.mark.parametrize("t", [1, 2, 3])
def test_fourier_flat_on_basis_state(t):
    s = basis_state(RegisterLayout.of(C=t), (1,))
    m = measure_fourier_basis(s, "C")
    assert np.allclose(m.probabilities, 2.0 ** -t)


@pytest.mark.parametrize("a0,a1", [(0, 3), (2, 2), (1, 6)])
def test_fourier_pair_state_collapse(a0, a1):
    t = 3
    lay = RegisterLayout.of(A=1, C=t)
    s = StateVector(lay, {(0, a0): R2, (1, a1): R2})
    m = measure_fourier_basis(s, "C")
    assert np.allclose(m.probabilities, 2.0 ** -t)
    for T in range(1 << t):
        post = m.collapse(T)
        vals = {lab[0]: amp for lab, amp in post.amplitudes.items()}
        ratio = vals[1] / vals[0]
        expected = (-1) ** (((T & a0).bit_count() + (T & a1).bit_count()) & 1)
        assert abs(ratio - expected) < 1e-9


def test_fourier_minus_state():
    s = StateVector(RegisterLayout.of(C=1), {(0,): R2, (1,): -R2})
    assert abs(measure_fourier_basis(s, "C").probabilities[1] - 1) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 4))
def test_fourier_agrees_with_character_family(seed, t):
    rng = np.random.default_rng(seed)
    s = random_state(RegisterLayout.of(A=2, C=t), rng)
    fast = measure_fourier_basis(s, "C").probabilities
    slow = measure_projective(s, ["C"], character_basis(t)).probabilities
    assert np.max(np.abs(fast - slow)) <= 1e-9
    assert abs(fast.sum() - 1) <= 1e-9 and fast.min() >= -1e-9


def test_povm_validation():
    with pytest.raises(QuantumStateError):
        POVM([np.eye(2), np.eye(2)])
    with pytest.raises(QuantumStateError):
        POVM([np.diag([2.0, 0.5]), np.diag([-1.0, 0.5])])
    with pytest.raises(QuantumStateError):
        POVM([np.array([[0.5, 0.1], [0.0, 0.5]]), np.array([[0.5, -0.1], [0.0, 0.5]])])


def test_povm_projector_containing_state():
    lay = RegisterLayout.of(A=1)
    s = StateVector(lay, {(0,): R2, (1,): R2})
    v = np.array([R2, R2])
    proj = np.outer(v, v)
    probs = apply_povm(s, POVM([np.eye(2) - proj, proj]))
    assert abs(probs[1] - 1) < 1e-12


def test_half_half_povm():
    s = random_state(RegisterLayout.of(A=2), np.random.default_rng(5))
    probs = apply_povm(s, POVM([np.eye(4) / 2, np.eye(4) / 2]))
    assert np.allclose(probs, 0.5)


@pytest.mark.parametrize("theta", [0.1, 0.4, math.pi / 4, 1.2, math.pi / 2])
def test_helstrom_success(theta):
    lay = RegisterLayout.of(A=1)
    psi0 = basis_state(lay, (0,))
    psi1 = StateVector(lay, {(0,): math.cos(theta), (1,): math.sin(theta)})
    rho0 = np.outer(psi0.to_dense(), psi0.to_dense().conj())
    rho1 = np.outer(psi1.to_dense(), psi1.to_dense().conj())
    vals, vecs = np.linalg.eigh(rho0 - rho1)
    e0 = sum(np.outer(vecs[:, i], vecs[:, i].conj()) for i in range(2) if vals[i] > 0)
    povm = POVM([e0, np.eye(2) - e0])
    success = 0.5 * apply_povm(psi0, povm)[0] + 0.5 * apply_povm(psi1, povm)[1]
    assert abs(success - (0.5 + math.sin(theta) / 2)) < 1e-9


def test_partial_trace_product():
    lay = RegisterLayout.of(A=1, B=2)
    s = product_state(lay, [{0: 1, 1: 1}, {3: 1}])
    rho = partial_trace(s, ["B"])
    assert rho.labels == ((3,),) and abs(rho.matrix[0, 0] - 1) < 1e-12


def test_partial_trace_pair_is_mixture():
    lay = RegisterLayout.of(A=2, B=3)
    s = StateVector(lay, {(1, 0b110): R2, (2, 0b011): R2})
    rho = partial_trace(s, ["B"])
    expect = mixture(["B"], [(0.5, (0b110,)), (0.5, (0b011,))])
    assert trace_distance(rho, expect) < 1e-12


def test_maximally_entangled_reduces_to_identity_half():
    lay = RegisterLayout.of(A=1, B=1)
    s = StateVector(lay, {(0, 0): R2, (1, 1): R2})
    rho = partial_trace(s, ["A"]).to_dense(lay)
    assert np.allclose(rho, np.eye(2) / 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_partial_trace_spectrum(seed):
    s = random_state(RegisterLayout.of(A=2, B=2, C=1), np.random.default_rng(seed))
    rho = partial_trace(s, ["B", "C"])
    ev = rho.eigenvalues()
    assert ev.min() >= -1e-9 and ev.max() <= 1 + 1e-9
    assert abs(rho.trace() - 1) <= 1e-9


def test_drop_requires_fixed_register():
    lay = RegisterLayout.of(A=1, B=1)
    s = StateVector(lay, {(0, 1): R2, (1, 1): R2})
    assert s.drop(["B"]).layout.names == ("A",)
    with pytest.raises(QuantumStateError):
        s.drop(["A"])
