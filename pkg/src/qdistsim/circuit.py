"""Device-agnostic circuit IR with global (node, slot) qubit addressing.

Circuits built for a single abstract machine use qubits on the virtual node
``"v"`` (see :func:`vq`); an :class:`~qdistsim.scheduler.Allocation` later binds
them to physical QPU slots. Classical bits are plain names; a bit lives on the
node of the qubit that was measured into it.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .errors import CircuitValidationError

VIRTUAL_NODE = "v"
UNITARY_TOL = 1e-10


@dataclass(frozen=True, order=True)
class QubitRef:
    node: str
    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"local index must be nonnegative, got {self.index}")

    def __str__(self) -> str:
        return f"{self.node}[{self.index}]"


def vq(index: int) -> QubitRef:
    """Qubit ``index`` of the abstract (not yet allocated) machine."""
    return QubitRef(VIRTUAL_NODE, index)


class GateKind(str, Enum):
    PREPARE = "PREPARE"
    X = "X"
    Y = "Y"
    Z = "Z"
    H = "H"
    S = "S"
    T = "T"
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    PHASE = "PHASE"
    CNOT = "CNOT"
    CZ = "CZ"
    CPHASE = "CPHASE"
    CUSTOM_SINGLE = "CUSTOM_SINGLE"
    CUSTOM_CONTROLLED = "CUSTOM_CONTROLLED"
    MEASURE = "MEASURE"
    COND_X = "COND_X"
    COND_Z = "COND_Z"
    RESET = "RESET"
    # only produced by the remapper
    EPR_GEN = "EPR_GEN"


FIXED_SINGLE = {GateKind.X, GateKind.Y, GateKind.Z, GateKind.H, GateKind.S, GateKind.T}
ROTATIONS = {GateKind.RX, GateKind.RY, GateKind.RZ, GateKind.PHASE}
SINGLE_QUBIT_UNITARY = FIXED_SINGLE | ROTATIONS | {GateKind.CUSTOM_SINGLE}
CONTROLLED = {GateKind.CNOT, GateKind.CZ, GateKind.CPHASE, GateKind.CUSTOM_CONTROLLED}
CONDITIONAL = {GateKind.COND_X, GateKind.COND_Z}
ANGLE_KINDS = ROTATIONS | {GateKind.CPHASE}
MATRIX_KINDS = {GateKind.CUSTOM_SINGLE, GateKind.CUSTOM_CONTROLLED}

_ARITY = {k: 1 for k in GateKind}
_ARITY.update({k: 2 for k in CONTROLLED})
_ARITY[GateKind.EPR_GEN] = 2

_SQ2 = 1 / math.sqrt(2)
_FIXED = {
    GateKind.X: np.array([[0, 1], [1, 0]], dtype=complex),
    GateKind.Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    GateKind.Z: np.array([[1, 0], [0, -1]], dtype=complex),
    GateKind.H: np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    GateKind.S: np.array([[1, 0], [0, 1j]], dtype=complex),
    GateKind.T: np.array([[1, 0], [0, cmath.exp(1j * math.pi / 4)]], dtype=complex),
}


def _freeze_matrix(m: Any) -> np.ndarray:
    arr = np.array(m, dtype=complex)
    if arr.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Gate:
    """One operation. Controlled kinds list the control first.

    ``param`` is an angle (rotations, CPHASE), a 2x2 matrix (CUSTOM_*), or the
    basis bit (PREPARE). ``bit`` names the classical bit written by MEASURE or
    read by COND_X / COND_Z.
    """

    kind: GateKind
    qubits: tuple[QubitRef, ...]
    param: Any = None
    bit: str | None = None

    def __post_init__(self) -> None:
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", tuple(self.qubits))
        if len(self.qubits) != _ARITY[kind]:
            raise ValueError(f"{kind.value} takes {_ARITY[kind]} operand(s), got {len(self.qubits)}")
        if kind in MATRIX_KINDS:
            object.__setattr__(self, "param", _freeze_matrix(self.param))
        elif kind in ANGLE_KINDS:
            object.__setattr__(self, "param", float(self.param))
        elif kind is GateKind.PREPARE:
            basis = int(self.param or 0)
            if basis not in (0, 1):
                raise ValueError(f"PREPARE basis must be 0 or 1, got {self.param}")
            object.__setattr__(self, "param", basis)
        if kind is GateKind.MEASURE or kind in CONDITIONAL:
            if not self.bit:
                raise ValueError(f"{kind.value} needs a classical bit name")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Gate):
            return NotImplemented
        if (self.kind, self.qubits, self.bit) != (other.kind, other.qubits, other.bit):
            return False
        if isinstance(self.param, np.ndarray) or isinstance(other.param, np.ndarray):
            return np.array_equal(self.param, other.param)
        return self.param == other.param

    def __hash__(self) -> int:
        return hash((self.kind, self.qubits, self.bit))

    def __repr__(self) -> str:
        ops = ", ".join(str(q) for q in self.qubits)
        extra = ""
        if self.kind in ANGLE_KINDS or self.kind is GateKind.PREPARE:
            extra = f"; {self.param!r}"
        if self.bit:
            extra += f"; bit={self.bit}"
        return f"Gate({self.kind.value} {ops}{extra})"

    @property
    def nodes(self) -> frozenset[str]:
        return frozenset(q.node for q in self.qubits)

    @property
    def is_controlled(self) -> bool:
        return self.kind in CONTROLLED

    def with_qubits(self, qubits: Sequence[QubitRef]) -> "Gate":
        return Gate(self.kind, tuple(qubits), self.param, self.bit)

    def remap(self, mapping: Callable[[QubitRef], QubitRef]) -> "Gate":
        return self.with_qubits([mapping(q) for q in self.qubits])


def single_qubit_matrix(gate: Gate) -> np.ndarray:
    """The 2x2 unitary of a single-qubit gate, or of the target action of a controlled gate."""
    kind = gate.kind
    if kind in _FIXED:
        return _FIXED[kind]
    if kind in (GateKind.CUSTOM_SINGLE, GateKind.CUSTOM_CONTROLLED):
        return gate.param
    if kind is GateKind.CNOT or kind is GateKind.COND_X:
        return _FIXED[GateKind.X]
    if kind is GateKind.CZ or kind is GateKind.COND_Z:
        return _FIXED[GateKind.Z]
    t = gate.param
    if kind is GateKind.RX:
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind is GateKind.RY:
        c, s = math.cos(t / 2), math.sin(t / 2)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind is GateKind.RZ:
        return np.array([[cmath.exp(-0.5j * t), 0], [0, cmath.exp(0.5j * t)]], dtype=complex)
    if kind in (GateKind.PHASE, GateKind.CPHASE):
        return np.array([[1, 0], [0, cmath.exp(1j * t)]], dtype=complex)
    raise ValueError(f"{kind.value} has no unitary matrix")


def is_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(m, dtype=complex)
    return bool(np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=tol, rtol=0))


# -- gate constructors -------------------------------------------------------

def prepare(q: QubitRef, basis: int = 0) -> Gate:
    return Gate(GateKind.PREPARE, (q,), basis)


def x(q: QubitRef) -> Gate:
    return Gate(GateKind.X, (q,))


def y(q: QubitRef) -> Gate:
    return Gate(GateKind.Y, (q,))


def z(q: QubitRef) -> Gate:
    return Gate(GateKind.Z, (q,))


def h(q: QubitRef) -> Gate:
    return Gate(GateKind.H, (q,))


def s(q: QubitRef) -> Gate:
    return Gate(GateKind.S, (q,))


def t(q: QubitRef) -> Gate:
    return Gate(GateKind.T, (q,))


def rx(q: QubitRef, theta: float) -> Gate:
    return Gate(GateKind.RX, (q,), theta)


def ry(q: QubitRef, theta: float) -> Gate:
    return Gate(GateKind.RY, (q,), theta)


def rz(q: QubitRef, theta: float) -> Gate:
    return Gate(GateKind.RZ, (q,), theta)


def phase(q: QubitRef, theta: float) -> Gate:
    return Gate(GateKind.PHASE, (q,), theta)


def cnot(control: QubitRef, target: QubitRef) -> Gate:
    return Gate(GateKind.CNOT, (control, target))


def cz(control: QubitRef, target: QubitRef) -> Gate:
    return Gate(GateKind.CZ, (control, target))


def cphase(control: QubitRef, target: QubitRef, theta: float) -> Gate:
    return Gate(GateKind.CPHASE, (control, target), theta)


def custom(q: QubitRef, matrix) -> Gate:
    return Gate(GateKind.CUSTOM_SINGLE, (q,), matrix)


def controlled(control: QubitRef, target: QubitRef, matrix) -> Gate:
    return Gate(GateKind.CUSTOM_CONTROLLED, (control, target), matrix)


def measure(q: QubitRef, bit: str) -> Gate:
    return Gate(GateKind.MEASURE, (q,), bit=bit)


def cond_x(q: QubitRef, bit: str) -> Gate:
    return Gate(GateKind.COND_X, (q,), bit=bit)


def cond_z(q: QubitRef, bit: str) -> Gate:
    return Gate(GateKind.COND_Z, (q,), bit=bit)


def reset(q: QubitRef) -> Gate:
    return Gate(GateKind.RESET, (q,))


def epr_gen(a: QubitRef, b: QubitRef) -> Gate:
    return Gate(GateKind.EPR_GEN, (a, b))


# -- circuits ------------------------------------------------------------------

@dataclass(frozen=True)
class Circuit:
    """An ordered gate list over a fixed qubit set.

    If ``qubits`` is omitted it is inferred from the gates in first-use order.
    """

    gates: tuple[Gate, ...] = ()
    qubits: tuple[QubitRef, ...] = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        if self.qubits is None:
            seen: dict[QubitRef, None] = {}
            for g in gates:
                for q in g.qubits:
                    seen.setdefault(q, None)
            object.__setattr__(self, "qubits", tuple(seen))
        else:
            qubits = tuple(dict.fromkeys(self.qubits))
            declared = set(qubits)
            missing = [q for g in gates for q in g.qubits if q not in declared]
            qubits += tuple(dict.fromkeys(missing))
            object.__setattr__(self, "qubits", qubits)

    @property
    def width(self) -> int:
        return len(self.qubits)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    @property
    def nodes(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(q.node for q in self.qubits))

    def measured_bits(self) -> tuple[str, ...]:
        """Bit names written by MEASURE, in first-write order."""
        return tuple(dict.fromkeys(g.bit for g in self.gates if g.kind is GateKind.MEASURE))

    def bit_nodes(self) -> dict[str, str]:
        """Node on which each measured bit lives (last writer wins)."""
        return {g.bit: g.qubits[0].node for g in self.gates if g.kind is GateKind.MEASURE}

    def remap(self, mapping: Callable[[QubitRef], QubitRef] | Mapping[QubitRef, QubitRef]) -> "Circuit":
        fn = mapping.__getitem__ if isinstance(mapping, Mapping) else mapping
        return Circuit(tuple(g.remap(fn) for g in self.gates), tuple(fn(q) for q in self.qubits))

    def __add__(self, other: "Circuit") -> "Circuit":
        return Circuit(self.gates + other.gates, self.qubits + other.qubits)

    def to_dict(self) -> dict:
        return {
            "qubits": [_qubit_json(q) for q in self.qubits],
            "gates": [gate_to_dict(g) for g in self.gates],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Circuit":
        qubits = tuple(_qubit_from_json(q) for q in data.get("qubits", []))
        gates = tuple(gate_from_dict(g) for g in data.get("gates", []))
        return cls(gates, qubits)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "Circuit":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path: str | Path) -> "Circuit":
        return cls.from_json(Path(path).read_text())


def _qubit_json(q: QubitRef) -> dict:
    return {"node": q.node, "index": q.index}


def _qubit_from_json(d: Mapping) -> QubitRef:
    return QubitRef(str(d["node"]), int(d["index"]))


def gate_to_dict(g: Gate) -> dict:
    out: dict[str, Any] = {"kind": g.kind.value, "operands": [_qubit_json(q) for q in g.qubits]}
    if g.kind in MATRIX_KINDS:
        out["matrix"] = [[float(v.real), float(v.imag)] for v in np.asarray(g.param).ravel()]
    elif g.kind in ANGLE_KINDS:
        out["param"] = g.param
    elif g.kind is GateKind.PREPARE:
        out["basis"] = g.param
    if g.bit is not None:
        out["bit"] = g.bit
    return out


def gate_from_dict(d: Mapping) -> Gate:
    """Inverse of :func:`gate_to_dict`.

    Matrices are row-major ``[re, im]`` pairs; a nested 2x2 list of pairs is
    also accepted.
    """
    kind = GateKind(str(d["kind"]).upper())
    qubits = tuple(_qubit_from_json(q) for q in d["operands"])
    param: Any = None
    if kind in MATRIX_KINDS:
        pairs = np.asarray(d["matrix"], dtype=float).reshape(-1, 2)
        if pairs.shape[0] != 4:
            raise ValueError(f"matrix for {kind.value} must have 4 entries")
        param = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(2, 2)
    elif kind in ANGLE_KINDS:
        param = float(d["param"])
    elif kind is GateKind.PREPARE:
        param = int(d.get("basis", 0))
    return Gate(kind, qubits, param, d.get("bit"))


# -- layering --------------------------------------------------------------------

@dataclass(frozen=True)
class LayeredCircuit:
    """Gates grouped into layers; ``layers[i]`` holds indices into ``circuit.gates``."""

    circuit: Circuit
    layers: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.layers)

    def gate_layers(self) -> list[list[Gate]]:
        return [[self.circuit.gates[i] for i in layer] for layer in self.layers]

    def flatten(self) -> list[Gate]:
        return [self.circuit.gates[i] for layer in self.layers for i in layer]


def layer_decompose(circuit: Circuit) -> LayeredCircuit:
    """Assign each gate to the earliest layer after everything it depends on.

    Dependencies are shared qubits, plus MEASURE -> COND on the same bit name.
    """
    qubit_level: dict[QubitRef, int] = {}
    bit_level: dict[str, int] = {}
    layers: list[list[int]] = []
    for i, g in enumerate(circuit.gates):
        level = max((qubit_level.get(q, 0) for q in g.qubits), default=0)
        if g.bit is not None:
            level = max(level, bit_level.get(g.bit, 0))
        if level == len(layers):
            layers.append([])
        layers[level].append(i)
        for q in g.qubits:
            qubit_level[q] = level + 1
        if g.bit is not None:
            bit_level[g.bit] = level + 1
    return LayeredCircuit(circuit, tuple(tuple(layer) for layer in layers))


# -- validation ------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    code: str
    message: str
    gate_index: int | None = None

    def __str__(self) -> str:
        where = f"gate {self.gate_index}: " if self.gate_index is not None else ""
        return f"{where}{self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def raise_if_invalid(self) -> None:
        if not self.ok:
            raise CircuitValidationError(self.violations)


def validate(circuit: Circuit, topology=None) -> ValidationReport:
    """Collect every problem with ``circuit``; with a topology also check addressing."""
    found: list[Violation] = []
    if topology is not None:
        for q in circuit.qubits:
            if q.node not in topology:
                found.append(Violation("unknown-node", f"unknown node_id {q.node!r} for qubit {q}"))
            elif q.index >= topology.capacity(q.node):
                found.append(Violation(
                    "index-out-of-range",
                    f"index out of range: {q} but {q.node} has {topology.capacity(q.node)} qubits",
                ))
    written: set[str] = set()
    for i, g in enumerate(circuit.gates):
        if len(set(g.qubits)) != len(g.qubits):
            found.append(Violation("duplicate-operands", f"duplicate operands in {g!r}", i))
        if g.kind in MATRIX_KINDS and not is_unitary(g.param):
            found.append(Violation("non-unitary", f"non-unitary matrix in {g.kind.value}", i))
        if g.kind in CONDITIONAL and g.bit not in written:
            found.append(Violation("undefined-bit", f"bit {g.bit!r} read before any MEASURE", i))
        if g.kind is GateKind.MEASURE:
            written.add(g.bit)
    return ValidationReport(tuple(found))
