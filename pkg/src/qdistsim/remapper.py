"""Rewrite a monolithic circuit into a distributed one using cat-entangler blocks.

Every controlled gate whose control and target sit on different QPUs is served
by a block: an EPR pair copies the control onto an ancilla on the target's QPU
(cat-entangler), the gates run locally from that copy, and the copy is then
measured out in the X basis with a Z correction back on the control
(cat-disentangler). Consecutive non-local gates with the same control and the
same remote QPU share one block.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable

from .circuit import (
    CONTROLLED,
    Circuit,
    Gate,
    GateKind,
    QubitRef,
    cnot,
    cond_x,
    cond_z,
    epr_gen,
    h,
    measure,
    reset,
)
from .errors import AncillaError, CapacityWarning, UnsupportedNonLocalError
from .scheduler import Allocation
from .topology import Topology

# protocol roles, in emission order
ENTANGLE_ROLES = ("epr", "ent_cnot", "ent_measure", "ent_correction")
DISENTANGLE_ROLES = ("dis_h", "dis_measure", "dis_correction", "reset_local", "reset_remote")


@dataclass(frozen=True)
class CatBlock:
    control: QubitRef
    remote_node: str
    gate_indices: tuple[int, ...]
    ancilla_local: QubitRef | None = None
    ancilla_remote: QubitRef | None = None

    @property
    def first(self) -> int:
        return self.gate_indices[0]

    @property
    def last(self) -> int:
        return self.gate_indices[-1]

    def bit_names(self, number: int) -> tuple[str, str]:
        return f"__cat{number}_m1", f"__cat{number}_m2"

    def to_dict(self) -> dict:
        def ref(q):
            return None if q is None else {"node": q.node, "index": q.index}

        return {
            "control": ref(self.control),
            "remote_node": self.remote_node,
            "gate_indices": list(self.gate_indices),
            "ancilla_local": ref(self.ancilla_local),
            "ancilla_remote": ref(self.ancilla_remote),
        }


@dataclass(frozen=True)
class Origin:
    """Where a distributed gate came from: a monolithic gate, a block role, or both (served gates)."""

    gate: int | None = None
    block: int | None = None
    role: str | None = None

    def to_dict(self) -> dict:
        return {k: v for k, v in (("gate", self.gate), ("block", self.block), ("role", self.role)) if v is not None}


@dataclass(frozen=True)
class DistributedCircuit:
    circuit: Circuit
    blocks: tuple[CatBlock, ...]
    origin: tuple[Origin, ...]
    data_qubits: tuple[QubitRef, ...] = ()
    ancillas: tuple[QubitRef, ...] = ()
    overflow: tuple[QubitRef, ...] = ()

    def to_dict(self) -> dict:
        out = self.circuit.to_dict()
        out["blocks"] = [b.to_dict() for b in self.blocks]
        out["origin"] = {str(i): o.to_dict() for i, o in enumerate(self.origin)}
        return out


def _physical(circuit: Circuit, allocation: Allocation | None) -> Circuit:
    if allocation is None:
        return circuit
    return circuit.remap(allocation.__getitem__)


def find_nonlocal(circuit: Circuit, allocation: Allocation | None = None) -> list[int]:
    """Indices of gates whose (allocated) operands span two or more QPUs."""
    phys = _physical(circuit, allocation)
    found = []
    for i, g in enumerate(phys.gates):
        if len(g.nodes) > 1:
            if g.kind not in CONTROLLED:
                raise UnsupportedNonLocalError(
                    f"unsupported non-local kind {g.kind.value} at gate {i}: only controlled gates may cross QPUs"
                )
            found.append(i)
    return found


def _group(phys: Circuit) -> list[tuple[QubitRef, str, list[int]]]:
    nonlocal_idx = set(find_nonlocal(phys))
    open_blocks: dict[QubitRef, tuple[str, list[int]]] = {}
    done: list[tuple[QubitRef, str, list[int]]] = []

    def close(q: QubitRef) -> None:
        remote, idx = open_blocks.pop(q)
        done.append((q, remote, idx))

    for i, g in enumerate(phys.gates):
        if i in nonlocal_idx:
            c, tgt = g.qubits
            if tgt in open_blocks:
                close(tgt)
            if c in open_blocks and open_blocks[c][0] == tgt.node:
                open_blocks[c][1].append(i)
                continue
            if c in open_blocks:
                close(c)
            open_blocks[c] = (tgt.node, [i])
        else:
            for q in g.qubits:
                if q in open_blocks:
                    close(q)
    for q in list(open_blocks):
        close(q)
    done.sort(key=lambda b: b[2][0])
    return done


class _AncillaPool:
    def __init__(self, topology: Topology | None, occupied: Iterable[QubitRef], strict: bool):
        self.topology = topology
        self.strict = strict
        self.occupied = set(occupied)
        self.free: dict[str, list[int]] = {}
        self.next_overflow: dict[str, int] = {}
        self.used: dict[QubitRef, None] = {}
        self.overflow: dict[QubitRef, None] = {}

    def _init_node(self, node: str) -> None:
        if node in self.free:
            return
        cap = self.topology.capacity(node) if self.topology is not None and node in self.topology else 0
        taken = {q.index for q in self.occupied if q.node == node}
        self.free[node] = [i for i in range(cap) if i not in taken]
        self.next_overflow[node] = max([cap - 1] + list(taken)) + 1

    def acquire(self, node: str) -> QubitRef:
        self._init_node(node)
        if self.free[node]:
            q = QubitRef(node, self.free[node].pop(0))
        else:
            if self.strict:
                raise AncillaError(f"no ancilla available on {node}: every declared slot is occupied")
            q = QubitRef(node, self.next_overflow[node])
            self.next_overflow[node] += 1
            self.overflow[q] = None
            warnings.warn(
                f"capacity exceeded on {node}: overflow ancilla {q} allocated beyond declared qubits",
                CapacityWarning,
                stacklevel=4,
            )
        self.used[q] = None
        return q

    def release(self, q: QubitRef) -> None:
        self.free[q.node].append(q.index)
        self.free[q.node].sort()


def _assign(
    phys: Circuit,
    topology: Topology | None,
    occupied: Iterable[QubitRef] | None,
    strict: bool,
) -> tuple[list[CatBlock], _AncillaPool]:
    raw = _group(phys)
    pool = _AncillaPool(topology, phys.qubits if occupied is None else occupied, strict)
    # opens sort before closes at the same gate index (single-gate blocks)
    events = sorted(
        [(idx[0], 0, b) for b, (_, _, idx) in enumerate(raw)]
        + [(idx[-1], 1, b) for b, (_, _, idx) in enumerate(raw)]
    )
    assigned: dict[int, tuple[QubitRef, QubitRef]] = {}
    for _, kind, b in events:
        control, remote, _ = raw[b]
        if kind == 0:
            assigned[b] = (pool.acquire(control.node), pool.acquire(remote))
        else:
            for q in assigned[b]:
                pool.release(q)
    blocks = [
        CatBlock(control, remote, tuple(idx), *assigned[b])
        for b, (control, remote, idx) in enumerate(raw)
    ]
    return blocks, pool


def group_blocks(
    circuit: Circuit,
    allocation: Allocation | None = None,
    topology: Topology | None = None,
    *,
    occupied: Iterable[QubitRef] | None = None,
    strict: bool = False,
) -> list[CatBlock]:
    """Group non-local controlled gates into cat blocks and assign their ancillas.

    A block collects consecutive non-local gates with one control qubit and
    one remote QPU; it closes when the control is touched by anything else
    (including being the target of another non-local gate), is measured, or
    the circuit ends. Ancillas come from slots on each QPU that are neither in
    ``occupied`` (default: the circuit's own qubits) nor held by a block still
    open; when none is left an overflow slot beyond capacity is used with a
    :class:`CapacityWarning`, or :class:`AncillaError` is raised if ``strict``.
    Ancillas are returned to the pool right after the block's last gate.
    """
    blocks, _ = _assign(_physical(circuit, allocation), topology, occupied, strict)
    return blocks


def remap(
    circuit: Circuit,
    allocation: Allocation | None = None,
    topology: Topology | None = None,
    *,
    occupied: Iterable[QubitRef] | None = None,
    strict: bool = False,
) -> DistributedCircuit:
    """Produce the equivalent distributed circuit.

    Local gates pass through with operands rewritten by ``allocation``. For
    each block the output contains, in order: EPR_GEN(local, remote);
    CNOT(control, local); MEASURE(local); COND_X(remote); the served gates
    controlled from ``remote``; H(remote); MEASURE(remote); COND_Z(control);
    RESET(local); RESET(remote). The disentangle part follows the block's last
    served gate directly.
    """
    phys = _physical(circuit, allocation)
    blocks, pool = _assign(phys, topology, occupied, strict)
    first = {b.first: n for n, b in enumerate(blocks)}
    last = {b.last: n for n, b in enumerate(blocks)}
    served = {i: n for n, b in enumerate(blocks) for i in b.gate_indices}
    existing_bits = set(phys.measured_bits())

    gates: list[Gate] = []
    origin: list[Origin] = []

    def emit(g: Gate, o: Origin) -> None:
        gates.append(g)
        origin.append(o)

    for i, g in enumerate(phys.gates):
        if i not in served:
            emit(g, Origin(gate=i))
            continue
        n = served[i]
        blk = blocks[n]
        a_loc, a_rem = blk.ancilla_local, blk.ancilla_remote
        m1, m2 = blk.bit_names(n)
        if m1 in existing_bits or m2 in existing_bits:
            raise ValueError(f"circuit uses reserved bit name {m1!r} or {m2!r}")
        if i == blk.first:
            emit(epr_gen(a_loc, a_rem), Origin(block=n, role="epr"))
            emit(cnot(blk.control, a_loc), Origin(block=n, role="ent_cnot"))
            emit(measure(a_loc, m1), Origin(block=n, role="ent_measure"))
            emit(cond_x(a_rem, m1), Origin(block=n, role="ent_correction"))
        emit(g.with_qubits((a_rem, g.qubits[1])), Origin(gate=i, block=n, role="served"))
        if i == blk.last:
            emit(h(a_rem), Origin(block=n, role="dis_h"))
            emit(measure(a_rem, m2), Origin(block=n, role="dis_measure"))
            emit(cond_z(blk.control, m2), Origin(block=n, role="dis_correction"))
            emit(reset(a_loc), Origin(block=n, role="reset_local"))
            emit(reset(a_rem), Origin(block=n, role="reset_remote"))

    ancillas = tuple(pool.used)
    out = Circuit(tuple(gates), phys.qubits + ancillas)
    return DistributedCircuit(out, tuple(blocks), tuple(origin), phys.qubits, ancillas, tuple(pool.overflow))
