"""Small exact statevector layer: labeled registers, basis maps, measurements.

Amplitudes are kept sparse, keyed by a label tuple with one int per register.
Protocol states here have a handful of branches but input registers of up to
(k-1)*n qubits, so dense storage is only ever built over the registers being
measured or traced (capped at MAX_DENSE_DIM).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .errors import CapExceeded, QuantumStateError

TOL = 1e-9
MAX_DENSE_DIM = 1 << 20

Label = tuple[int, ...]


@dataclass(frozen=True)
class RegisterLayout:
    registers: tuple[tuple[str, int], ...]

    def __post_init__(self):
        names = [name for name, _ in self.registers]
        if len(set(names)) != len(names):
            raise ValueError(f"register names must be unique: {names}")
        for name, width in self.registers:
            if width < 1:
                raise ValueError(f"register {name!r} needs a positive width")

    @classmethod
    def of(cls, **widths: int) -> "RegisterLayout":
        return cls(tuple(widths.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no register named {name!r}") from None

    def width(self, name: str) -> int:
        return self.registers[self.index(name)][1]

    def dim(self, names: Iterable[str]) -> int:
        return 1 << sum(self.width(nm) for nm in names)

    def without(self, names: Iterable[str]) -> "RegisterLayout":
        drop = set(names)
        return RegisterLayout(tuple(r for r in self.registers if r[0] not in drop))


class StateVector:
    """Normalized pure state over a RegisterLayout. Treat as immutable."""

    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: RegisterLayout, amplitudes: Mapping[Label, complex], normalize: bool = False):
        amps = {}
        nreg = len(layout.registers)
        limits = [1 << w for _, w in layout.registers]
        for label, amp in amplitudes.items():
            label = tuple(int(v) for v in label)
            if len(label) != nreg or any(not 0 <= v < lim for v, lim in zip(label, limits)):
                raise QuantumStateError(f"label {label} does not fit layout {layout.registers}")
            if amp != 0:
                amps[label] = amps.get(label, 0) + complex(amp)
        norm = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
        if normalize:
            if norm == 0:
                raise QuantumStateError("cannot normalize the zero vector")
            amps = {lab: a / norm for lab, a in amps.items()}
        elif abs(norm - 1) > TOL:
            raise QuantumStateError(f"state norm {norm} differs from 1")
        self.layout = layout
        self.amplitudes = amps

    def __repr__(self):
        terms = ", ".join(f"{lab}: {amp:.4g}" for lab, amp in sorted(self.amplitudes.items()))
        return f"StateVector({self.layout.names}, {{{terms}}})"

    def amplitude(self, label: Sequence[int]) -> complex:
        return self.amplitudes.get(tuple(label), 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def register_values(self, name: str) -> set[int]:
        idx = self.layout.index(name)
        return {lab[idx] for lab in self.amplitudes}

    def isclose(self, other: "StateVector", atol: float = TOL) -> bool:
        if self.layout != other.layout:
            return False
        keys = set(self.amplitudes) | set(other.amplitudes)
        return all(abs(self.amplitude(k) - other.amplitude(k)) <= atol for k in keys)

    def to_dense(self) -> np.ndarray:
        dim = self.layout.dim(self.layout.names)
        if dim > MAX_DENSE_DIM:
            raise CapExceeded(f"dense dimension {dim} exceeds {MAX_DENSE_DIM}")
        out = np.zeros(dim, dtype=complex)
        for lab, amp in self.amplitudes.items():
            out[_pack(lab, [w for _, w in self.layout.registers])] = amp
        return out

    def drop(self, names: Sequence[str]) -> "StateVector":
        """Remove registers that are in a fixed computational basis state."""
        idxs = [self.layout.index(nm) for nm in names]
        values = {tuple(lab[i] for i in idxs) for lab in self.amplitudes}
        if len(values) > 1:
            raise QuantumStateError(f"registers {tuple(names)} are not in a product basis state")
        keep = [i for i in range(len(self.layout.registers)) if i not in idxs]
        amps = {tuple(lab[i] for i in keep): a for lab, a in self.amplitudes.items()}
        return StateVector(self.layout.without(names), amps)


def _pack(values: Sequence[int], widths: Sequence[int]) -> int:
    out = 0
    for v, w in zip(values, widths):
        out = (out << w) | v
    return out


def _unpack(index: int, widths: Sequence[int]) -> tuple[int, ...]:
    vals = []
    for w in reversed(widths):
        vals.append(index & ((1 << w) - 1))
        index >>= w
    return tuple(reversed(vals))


def basis_state(layout: RegisterLayout, label: Sequence[int]) -> StateVector:
    return StateVector(layout, {tuple(label): 1.0})


def product_state(layout: RegisterLayout, factors: Sequence[Mapping[int, complex]]) -> StateVector:
    """Tensor product of one sparse factor per register (each factor is normalized first)."""
    normed = []
    for fac in factors:
        nrm = math.sqrt(sum(abs(a) ** 2 for a in fac.values()))
        normed.append({v: a / nrm for v, a in fac.items()})
    amps = {}
    for combo in itertools.product(*(f.items() for f in normed)):
        amp = 1.0 + 0j
        for _, a in combo:
            amp *= a
        amps[tuple(v for v, _ in combo)] = amp
    return StateVector(layout, amps)


BasisMap = Callable[[Label], Union[Label, tuple[Label, complex]]]


def apply_basis_map(state: StateVector, fn: BasisMap, layout: Optional[RegisterLayout] = None) -> StateVector:
    """Send each basis label to a (label, phase) pair; the map must be injective on the support.

    ``fn`` may return just a label (phase 1). Phases must have unit modulus.
    ``layout`` lets the map change register widths (e.g. write into a fresh register).
    """
    out: dict[Label, complex] = {}
    for label, amp in state.amplitudes.items():
        res = fn(label)
        if len(res) == 2 and isinstance(res[0], tuple):
            new_label, phase = res
        else:
            new_label, phase = res, 1.0
        if abs(abs(phase) - 1) > TOL:
            raise QuantumStateError(f"phase {phase} is not unit modulus")
        new_label = tuple(new_label)
        if new_label in out:
            raise QuantumStateError(f"basis map is not injective: two labels map to {new_label}")
        out[new_label] = amp * phase
    return StateVector(layout or state.layout, out)


def _split(state: StateVector, registers: Sequence[str]):
    """Dense matrix psi[sub, r] over the measured registers, one column per distinct rest label."""
    layout = state.layout
    idxs = [layout.index(nm) for nm in registers]
    widths = [layout.registers[i][1] for i in idxs]
    dim = 1 << sum(widths)
    if dim > MAX_DENSE_DIM:
        raise CapExceeded(f"measured subspace dimension {dim} exceeds {MAX_DENSE_DIM}")
    rest_idx = [i for i in range(len(layout.registers)) if i not in idxs]
    rest_labels: dict[Label, int] = {}
    entries = []
    for lab, amp in state.amplitudes.items():
        rest = tuple(lab[i] for i in rest_idx)
        col = rest_labels.setdefault(rest, len(rest_labels))
        entries.append((_pack([lab[i] for i in idxs], widths), col, amp))
    psi = np.zeros((dim, len(rest_labels)), dtype=complex)
    for sub, col, amp in entries:
        psi[sub, col] += amp
    return idxs, widths, rest_idx, list(rest_labels), psi


class Measurement:
    """Outcome distribution of a measurement plus the per-outcome post-measurement states."""

    def __init__(self, state, registers, widths, idxs, rest_idx, rest_labels, projected, vector):
        self.state = state
        self.registers = tuple(registers)
        self._widths = widths
        self._idxs = idxs
        self._rest_idx = rest_idx
        self._rest_labels = rest_labels
        self._projected = projected          # (outcomes, rest) amplitudes <b|psi>
        self._vector = vector                # outcome -> basis vector over the measured registers
        probs = np.sum(np.abs(projected) ** 2, axis=1)
        if abs(probs.sum() - 1) > TOL:
            raise QuantumStateError(f"outcome probabilities sum to {probs.sum()}")
        self.probabilities = probs

    def rest_amplitudes(self, outcome: int) -> dict[Label, complex]:
        """Unnormalized <b_outcome|psi> over the unmeasured registers, keyed by their labels."""
        row = self._projected[outcome]
        return {rest: complex(row[col]) for col, rest in enumerate(self._rest_labels) if row[col] != 0}

    def collapse(self, outcome: int) -> StateVector:
        p = self.probabilities[outcome]
        if p <= TOL:
            raise QuantumStateError(f"outcome {outcome} has probability {p}")
        rest_amps = self._projected[outcome] / math.sqrt(p)
        vec = self._vector(outcome)
        nreg = len(self.state.layout.registers)
        amps = {}
        for sub in np.flatnonzero(np.abs(vec) > 1e-15):
            sub_vals = _unpack(int(sub), self._widths)
            for col, rest in enumerate(self._rest_labels):
                a = vec[sub] * rest_amps[col]
                if a == 0:
                    continue
                label = [0] * nreg
                for i, v in zip(self._idxs, sub_vals):
                    label[i] = v
                for i, v in zip(self._rest_idx, rest):
                    label[i] = v
                amps[tuple(label)] = a
        return StateVector(self.state.layout, amps, normalize=True)


def check_orthonormal(basis: np.ndarray, atol: float = TOL) -> None:
    basis = np.asarray(basis, dtype=complex)
    if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
        raise QuantumStateError("basis must be a square array with one vector per row")
    gram = basis.conj() @ basis.T
    if not np.allclose(gram, np.eye(basis.shape[0]), atol=atol, rtol=0):
        raise QuantumStateError("basis vectors are not orthonormal")


def measure_projective(state: StateVector, registers: Sequence[str], basis: np.ndarray) -> Measurement:
    """Measure ``registers`` in the orthonormal basis given by the rows of ``basis``."""
    basis = np.asarray(basis, dtype=complex)
    idxs, widths, rest_idx, rest_labels, psi = _split(state, registers)
    if basis.shape != (psi.shape[0], psi.shape[0]):
        raise QuantumStateError(f"basis shape {basis.shape} does not match subspace dimension {psi.shape[0]}")
    check_orthonormal(basis)
    projected = basis.conj() @ psi
    return Measurement(state, registers, widths, idxs, rest_idx, rest_labels, projected, lambda o: basis[o])


def computational_basis(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def plus_minus_basis(width: int, low: int, high: int) -> np.ndarray:
    """Basis of a register: (|low> +- |high>)/sqrt2 as outcomes 0 and 1, then the other labels."""
    dim = 1 << width
    rows = []
    plus = np.zeros(dim, dtype=complex)
    plus[low] = plus[high] = 1 / math.sqrt(2)
    minus = np.zeros(dim, dtype=complex)
    minus[low], minus[high] = 1 / math.sqrt(2), -1 / math.sqrt(2)
    rows += [plus, minus]
    for v in range(dim):
        if v not in (low, high):
            e = np.zeros(dim, dtype=complex)
            e[v] = 1
            rows.append(e)
    return np.array(rows)


def character_basis(width: int) -> np.ndarray:
    """Rows chi_T[a] = 2^{-t/2} (-1)^{T.a}, built entry by entry."""
    dim = 1 << width
    out = np.empty((dim, dim), dtype=complex)
    for t in range(dim):
        for a in range(dim):
            out[t, a] = (-1) ** ((t & a).bit_count()) / math.sqrt(dim)
    return out


def _fwht_rows(m: np.ndarray) -> np.ndarray:
    a = m.copy()
    size = a.shape[0]
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h, a.shape[-1])
        x = a[:, 0].copy()
        a[:, 0] += a[:, 1]
        a[:, 1] = x - a[:, 1]
        a = a.reshape(size, -1)
        h *= 2
    return a / math.sqrt(size)


def measure_fourier_basis(state: StateVector, register: str) -> Measurement:
    """Measure one register in the character basis via a fast Walsh-Hadamard transform."""
    idxs, widths, rest_idx, rest_labels, psi = _split(state, [register])
    projected = _fwht_rows(psi)
    dim = psi.shape[0]

    def vector(t: int) -> np.ndarray:
        signs = np.array([1 - 2 * ((t & a).bit_count() & 1) for a in range(dim)], dtype=complex)
        return signs / math.sqrt(dim)

    return Measurement(state, [register], widths, idxs, rest_idx, rest_labels, projected, vector)


class POVM:
    """Positive operators E_i over the dense space of some registers, summing to identity."""

    def __init__(self, operators: Sequence[np.ndarray], atol: float = TOL):
        ops = [np.asarray(e, dtype=complex) for e in operators]
        if not ops:
            raise QuantumStateError("POVM needs at least one element")
        dim = ops[0].shape[0]
        for i, e in enumerate(ops):
            if e.shape != (dim, dim):
                raise QuantumStateError(f"element {i} has shape {e.shape}, expected {(dim, dim)}")
            if not np.allclose(e, e.conj().T, atol=atol, rtol=0):
                raise QuantumStateError(f"element {i} is not Hermitian")
            if np.linalg.eigvalsh(e).min() < -atol:
                raise QuantumStateError(f"element {i} is not positive semidefinite")
        if not np.allclose(sum(ops), np.eye(dim), atol=atol, rtol=0):
            raise QuantumStateError("POVM elements do not sum to the identity")
        self.operators = ops
        self.dim = dim

    @classmethod
    def from_projectors(cls, vectors: Sequence[np.ndarray]) -> "POVM":
        return cls([np.outer(v, np.conj(v)) for v in vectors])


def apply_povm(state: StateVector, povm: POVM, registers: Optional[Sequence[str]] = None) -> np.ndarray:
    """p_i = Tr(E_i rho) where rho is the state reduced to ``registers`` (default: all)."""
    registers = tuple(registers) if registers is not None else state.layout.names
    _, _, _, _, psi = _split(state, registers)
    if psi.shape[0] != povm.dim:
        raise QuantumStateError(f"POVM acts on dimension {povm.dim}, registers have {psi.shape[0]}")
    rho = psi @ psi.conj().T
    probs = np.array([np.real(np.trace(e @ rho)) for e in povm.operators])
    if probs.min() < -TOL or abs(probs.sum() - 1) > TOL:
        raise QuantumStateError(f"invalid outcome distribution {probs}")
    return probs


@dataclass(frozen=True)
class DensityMatrix:
    """Reduced state restricted to its support: matrix[i, j] = <labels[i]| rho |labels[j]>."""

    registers: tuple[str, ...]
    labels: tuple[Label, ...]
    matrix: np.ndarray

    def entry(self, row: Label, col: Label) -> complex:
        try:
            return self.matrix[self.labels.index(tuple(row)), self.labels.index(tuple(col))]
        except ValueError:
            return 0j

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def embed(self, labels: Sequence[Label]) -> np.ndarray:
        """Matrix over a superset of the support labels, in the given order."""
        pos = {lab: i for i, lab in enumerate(labels)}
        out = np.zeros((len(labels), len(labels)), dtype=complex)
        idx = [pos[lab] for lab in self.labels]
        out[np.ix_(idx, idx)] = self.matrix
        return out

    def to_dense(self, layout: RegisterLayout) -> np.ndarray:
        widths = [layout.width(nm) for nm in self.registers]
        dim = 1 << sum(widths)
        if dim > MAX_DENSE_DIM:
            raise CapExceeded(f"dense dimension {dim} exceeds {MAX_DENSE_DIM}")
        out = np.zeros((dim, dim), dtype=complex)
        idx = [_pack(lab, widths) for lab in self.labels]
        out[np.ix_(idx, idx)] = self.matrix
        return out


def partial_trace(state: StateVector, keep: Sequence[str]) -> DensityMatrix:
    layout = state.layout
    keep_idx = [layout.index(nm) for nm in keep]
    rest_idx = [i for i in range(len(layout.registers)) if i not in keep_idx]
    kept: dict[Label, int] = {}
    rest: dict[Label, int] = {}
    entries = []
    for lab, amp in state.amplitudes.items():
        k_lab = tuple(lab[i] for i in keep_idx)
        r_lab = tuple(lab[i] for i in rest_idx)
        entries.append((kept.setdefault(k_lab, len(kept)), rest.setdefault(r_lab, len(rest)), amp))
    psi = np.zeros((len(kept), len(rest)), dtype=complex)
    for row, col, amp in entries:
        psi[row, col] += amp
    return DensityMatrix(tuple(keep), tuple(kept), psi @ psi.conj().T)


def mixture(registers: Sequence[str], weighted_labels: Iterable[tuple[float, Label]]) -> DensityMatrix:
    """Classical mixture sum_j p_j |label_j><label_j|."""
    diag: dict[Label, float] = {}
    for p, lab in weighted_labels:
        diag[tuple(lab)] = diag.get(tuple(lab), 0.0) + float(p)
    labels = tuple(diag)
    return DensityMatrix(tuple(registers), labels, np.diag([diag[lab] for lab in labels]).astype(complex))


def trace_distance(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    if rho.registers != sigma.registers:
        raise QuantumStateError("density matrices live on different registers")
    labels = tuple(dict.fromkeys(rho.labels + sigma.labels))
    diff = rho.embed(labels) - sigma.embed(labels)
    return float(0.5 * np.abs(np.linalg.eigvalsh(diff)).sum())
