"""Dense statevector simulation over the union of all nodes' qubits.

The amplitudes are stored as a rank-n tensor of shape ``(2,) * n``; axis ``i``
belongs to ``registered[i]``, so the first registered qubit is the most
significant bit of the flattened index.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import (
    CONDITIONAL,
    CONTROLLED,
    SINGLE_QUBIT_UNITARY,
    Circuit,
    Gate,
    GateKind,
    QubitRef,
    single_qubit_matrix,
)
from .errors import AncillaNotResetError, BackendError, UnregisteredQubitError

MAX_QUBITS = 24
NORM_TOL = 1e-10
_PROB_EPS = 1e-12

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def make_rng(seed: int | np.random.Generator | None) -> np.random.Generator:
    """Counter-based generator (Philox) so streams are reproducible across platforms."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValueError("a seed is required for sampling runs")
    return np.random.Generator(np.random.Philox(int(seed)))


@dataclass(frozen=True)
class PauliString:
    """Tensor product of Pauli factors; qubits not listed are identity."""

    factors: Mapping[QubitRef, str]

    def __post_init__(self) -> None:
        clean = {}
        for q, p in dict(self.factors).items():
            p = str(p).upper()
            if p not in _PAULI:
                raise ValueError(f"unknown Pauli factor {p!r}")
            if p != "I":
                clean[q] = p
        object.__setattr__(self, "factors", MappingProxyType(clean))

    @classmethod
    def from_label(cls, label: str, qubits: Sequence[QubitRef]) -> "PauliString":
        """``from_label("ZIX", [a, b, c])`` puts Z on a and X on c."""
        if len(label) != len(qubits):
            raise ValueError(f"label {label!r} has {len(label)} factors for {len(qubits)} qubits")
        return cls(dict(zip(qubits, label)))

    @property
    def support(self) -> tuple[QubitRef, ...]:
        return tuple(self.factors)

    def label(self, qubits: Sequence[QubitRef]) -> str:
        return "".join(self.factors.get(q, "I") for q in qubits)

    def remap(self, mapping) -> "PauliString":
        fn = mapping.__getitem__ if isinstance(mapping, Mapping) else mapping
        return PauliString({fn(q): p for q, p in self.factors.items()})

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.factors.items())))

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PauliString) and dict(self.factors) == dict(other.factors)


class StateVector:
    """A pure state over an ordered, growable list of registered qubits."""

    def __init__(self, qubits: Iterable[QubitRef] = ()) -> None:
        self.registered: list[QubitRef] = []
        self._axis: dict[QubitRef, int] = {}
        self.tensor = np.ones((), dtype=complex)
        for q in qubits:
            self.register(q)

    @property
    def num_qubits(self) -> int:
        return len(self.registered)

    @property
    def amplitudes(self) -> np.ndarray:
        return self.tensor.reshape(-1)

    def register(self, q: QubitRef) -> None:
        """Add ``q`` in |0> as the new least significant qubit."""
        if q in self._axis:
            raise BackendError(f"qubit {q} already registered")
        if self.num_qubits >= MAX_QUBITS:
            raise BackendError(
                f"cannot register {q}: dense simulation is capped at {MAX_QUBITS} qubits"
            )
        self._axis[q] = len(self.registered)
        self.registered.append(q)
        new = np.zeros(self.tensor.shape + (2,), dtype=complex)
        new[..., 0] = self.tensor
        self.tensor = new

    def is_registered(self, q: QubitRef) -> bool:
        return q in self._axis

    def axis(self, q: QubitRef) -> int:
        try:
            return self._axis[q]
        except KeyError:
            raise UnregisteredQubitError(q) from None

    def copy(self) -> "StateVector":
        other = StateVector.__new__(StateVector)
        other.registered = list(self.registered)
        other._axis = dict(self._axis)
        other.tensor = self.tensor.copy()
        return other

    def norm(self) -> float:
        return float(np.linalg.norm(self.tensor))

    # -- unitaries --

    def apply_single(self, matrix: np.ndarray, q: QubitRef) -> None:
        ax = self.axis(q)
        moved = np.tensordot(matrix, self.tensor, axes=([1], [ax]))
        self.tensor = np.moveaxis(moved, 0, ax)

    def apply_controlled(self, matrix: np.ndarray, control: QubitRef, target: QubitRef) -> None:
        c, tq = self.axis(control), self.axis(target)
        if c == tq:
            raise BackendError(f"control and target coincide: {control}")
        idx = [slice(None)] * self.tensor.ndim
        idx[c] = 1
        idx = tuple(idx)
        sub = self.tensor[idx]
        t_ax = tq - (tq > c)
        self.tensor[idx] = np.moveaxis(np.tensordot(matrix, sub, axes=([1], [t_ax])), 0, t_ax)

    # -- non-unitary --

    def _slice(self, q: QubitRef, bit: int) -> tuple:
        idx: list = [slice(None)] * self.tensor.ndim
        idx[self.axis(q)] = bit
        return tuple(idx)

    def probability_one(self, q: QubitRef) -> float:
        sub = self.tensor[self._slice(q, 1)]
        return float(np.vdot(sub, sub).real)

    def project(self, q: QubitRef, bit: int) -> None:
        self.tensor[self._slice(q, 1 - bit)] = 0
        flat = self.tensor.reshape(-1)
        norm = float(np.sqrt(np.vdot(flat, flat).real))
        if norm == 0:
            raise BackendError(f"projection of {q} onto |{bit}> has zero probability")
        self.tensor /= norm

    def measure(self, q: QubitRef, rng: np.random.Generator) -> int:
        p1 = min(max(self.probability_one(q), 0.0), 1.0)
        bit = int(rng.random() < p1)
        self.project(q, bit)
        return bit

    def reset(self, q: QubitRef, rng: np.random.Generator | None = None) -> None:
        """Return ``q`` to |0>. Draws from ``rng`` only when the outcome is not already certain."""
        p1 = self.probability_one(q)
        if p1 < _PROB_EPS:
            bit = 0
        elif p1 > 1 - _PROB_EPS:
            bit = 1
        else:
            if rng is None:
                raise BackendError(f"reset of superposed qubit {q} needs an rng")
            bit = int(rng.random() < p1)
        self.project(q, bit)
        if bit:
            self.apply_single(_PAULI["X"], q)

    def is_zero(self, q: QubitRef, tol: float = _PROB_EPS) -> bool:
        return self.probability_one(q) < tol

    # -- observables --

    def expectation(self, pauli: PauliString) -> float:
        other = self.copy()
        for q, p in pauli.factors.items():
            other.apply_single(_PAULI[p], q)
        val = np.vdot(self.tensor.reshape(-1), other.tensor.reshape(-1))
        if abs(val.imag) > 1e-10:
            raise BackendError(f"expectation has imaginary part {val.imag}")
        return float(val.real)

    def reduced(self, qubits: Sequence[QubitRef]) -> np.ndarray:
        """Amplitudes over ``qubits`` (in that order), with every other qubit projected to |0>.

        Only meaningful when every other qubit is in |0>, e.g. reset ancillas.
        """
        axes = [self.axis(q) for q in qubits]
        idx: list = [0] * self.tensor.ndim
        for a in axes:
            idx[a] = slice(None)
        sub = self.tensor[tuple(idx)]
        order = np.argsort(np.argsort(axes))
        return np.transpose(sub, order).reshape(-1).copy()

    def marginal_probabilities(self, qubits: Sequence[QubitRef]) -> np.ndarray:
        axes = [self.axis(q) for q in qubits]
        others = tuple(a for a in range(self.tensor.ndim) if a not in axes)
        probs = np.sum(np.abs(self.tensor) ** 2, axis=others)
        kept = sorted(axes)
        perm = [kept.index(a) for a in axes]
        return np.transpose(probs, perm).reshape(-1)

    def to_json(self) -> str:
        """Debug dump of the amplitudes."""
        return json.dumps({
            "qubits": [str(q) for q in self.registered],
            "amplitudes": [[float(a.real), float(a.imag)] for a in self.amplitudes],
        })


# -- functional wrappers ------------------------------------------------------------

def apply_gate(state: StateVector, gate: Gate, rng: np.random.Generator | None = None) -> StateVector:
    """Apply a unitary, PREPARE or RESET gate in place and return ``state``."""
    kind = gate.kind
    if kind in SINGLE_QUBIT_UNITARY:
        state.apply_single(single_qubit_matrix(gate), gate.qubits[0])
    elif kind in CONTROLLED:
        state.apply_controlled(single_qubit_matrix(gate), *gate.qubits)
    elif kind is GateKind.PREPARE:
        state.reset(gate.qubits[0], rng)
        if gate.param:
            state.apply_single(_PAULI["X"], gate.qubits[0])
    elif kind is GateKind.RESET:
        state.reset(gate.qubits[0], rng)
    elif kind is GateKind.EPR_GEN:
        gen_epr(state, *gate.qubits)
    else:
        raise BackendError(f"{kind.value} is not a state-only gate; use measure or run_circuit")
    return state


def gen_epr(state: StateVector, a: QubitRef, b: QubitRef) -> StateVector:
    """Turn two |0> qubits into (|00> + |11>)/sqrt(2)."""
    for q in (a, b):
        if not state.is_zero(q):
            raise AncillaNotResetError(f"ancilla not reset: {q} is not in |0>")
    state.apply_single(single_qubit_matrix(Gate(GateKind.H, (a,))), a)
    state.apply_controlled(_PAULI["X"], a, b)
    return state


def measure(state: StateVector, q: QubitRef, rng: np.random.Generator) -> tuple[int, StateVector]:
    bit = state.measure(q, rng)
    return bit, state


def exact_expectation(state: StateVector, pauli: PauliString) -> float:
    return state.expectation(pauli)


def fidelity(a: np.ndarray, b: np.ndarray) -> float:
    """|<a|b>|^2 for normalized amplitude vectors."""
    return float(abs(np.vdot(a, b)) ** 2)


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """max |a - e^{i phi} b| with phi chosen to align the global phase."""
    overlap = np.vdot(b, a)
    ph = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a - ph * b)))


# -- direct circuit simulation (no network) ------------------------------------------

def run_circuit(
    circuit: Circuit,
    rng: np.random.Generator | int | None = None,
    *,
    qubits: Sequence[QubitRef] | None = None,
    deferred: bool = False,
    state: StateVector | None = None,
) -> tuple[StateVector, dict[str, int]]:
    """Simulate ``circuit`` gate by gate on one statevector.

    With ``deferred=True`` measurements are not sampled: a MEASURE whose bit is
    later read by a COND gate turns that COND into a controlled gate from the
    measured qubit (the principle of deferred measurement), other MEASUREs are
    no-ops, and RESET requires the qubit to be unentangled and then rotates it
    back to |0>. The run is then deterministic and the final statevector can be
    compared exactly against another circuit.

    Returns the final state and the classical bits (empty when deferred).
    """
    if state is None:
        state = StateVector(qubits if qubits is not None else circuit.qubits)
    for q in circuit.qubits:
        if not state.is_registered(q):
            state.register(q)
    bits: dict[str, int] = {}
    deferred_src: dict[str, QubitRef] = {}
    touched_after: set[str] = set()
    if not deferred:
        rng = make_rng(rng)
    for g in circuit.gates:
        kind = g.kind
        if kind is GateKind.MEASURE:
            if deferred:
                deferred_src[g.bit] = g.qubits[0]
                touched_after.discard(g.bit)
            else:
                bits[g.bit] = state.measure(g.qubits[0], rng)
        elif kind in CONDITIONAL:
            matrix = single_qubit_matrix(g)
            if deferred:
                if g.bit in touched_after:
                    raise BackendError(f"cannot defer {g!r}: source qubit changed after measurement")
                state.apply_controlled(matrix, deferred_src[g.bit], g.qubits[0])
            elif bits[g.bit]:
                state.apply_single(matrix, g.qubits[0])
        elif deferred and kind in (GateKind.RESET, GateKind.PREPARE):
            _deferred_reset(state, g.qubits[0])
            if kind is GateKind.PREPARE and g.param:
                state.apply_single(_PAULI["X"], g.qubits[0])
        else:
            apply_gate(state, g, None if deferred else rng)
        if deferred and kind is not GateKind.MEASURE:
            touched_after.update(b for b, src in deferred_src.items() if src in g.qubits)
    return state, bits


def _deferred_reset(state: StateVector, q: QubitRef) -> None:
    """Rotate an unentangled qubit to |0>; fail if it is entangled with anything."""
    ax = state.axis(q)
    mat = np.moveaxis(state.tensor, ax, 0).reshape(2, -1)
    # rank-1 check: the qubit factorizes iff the 2 x rest matrix has one nonzero singular value
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size > 1 and sv[1] > 1e-7:
        raise BackendError(f"deferred reset of {q}: qubit is entangled (singular value {sv[1]:.3g})")
    u, _, _ = np.linalg.svd(mat)
    local = u[:, 0]
    # unitary taking |local> to |0>
    rot = np.array([[local[0].conjugate(), local[1].conjugate()], [-local[1], local[0]]], dtype=complex)
    state.apply_single(rot, q)
    state.project(q, 0)
