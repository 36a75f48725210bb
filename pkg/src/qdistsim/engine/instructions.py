"""Compile a (distributed) circuit into per-node timestamped instruction lists."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Iterator, Mapping, Sequence

from ..circuit import CONDITIONAL, CONTROLLED, SINGLE_QUBIT_UNITARY, Circuit, Gate, GateKind, QubitRef
from ..errors import TimingError
from ..remapper import DistributedCircuit, Origin
from ..topology import DEFAULT_DURATION, Topology


class InstrKind(str, Enum):
    PREPARE = "PREPARE"
    SINGLE_GATE = "SINGLE_GATE"
    TWO_QUBIT_GATE = "TWO_QUBIT_GATE"
    MEASURE = "MEASURE"
    EPR_SEND = "EPR_SEND"
    EPR_RECV = "EPR_RECV"
    CLASSICAL_SEND = "CLASSICAL_SEND"
    CLASSICAL_RECV = "CLASSICAL_RECV"
    COND_CORRECTION = "COND_CORRECTION"
    RESET = "RESET"
    REPORT = "REPORT"


@dataclass(frozen=True, eq=False)
class Instruction:
    """One control operation for one node at one tick.

    ``bit``/``bit_node``/``version`` identify a classical value: the name, the
    node that measured it and which write of that name it is. EPR instructions
    carry the pair id and the partner qubit on the peer node.
    """

    tick: int
    node: str
    kind: InstrKind
    qubits: tuple[QubitRef, ...] = ()
    gate: Gate | None = None
    bit: str | None = None
    bit_node: str | None = None
    version: int = 0
    peer: str | None = None
    peer_qubit: QubitRef | None = None
    pair: int | None = None
    bits: tuple[str, ...] = ()
    role: str | None = None
    origin: int | None = None
    duration: int = DEFAULT_DURATION
    program: int = 0

    def to_dict(self) -> dict:
        out: dict = {"tick": self.tick, "node": self.node, "kind": self.kind.value, "program": self.program}
        if self.qubits:
            out["qubits"] = [str(q) for q in self.qubits]
        if self.gate is not None:
            out["gate"] = self.gate.kind.value
            if isinstance(self.gate.param, float):
                out["param"] = self.gate.param
        for key in ("bit", "bit_node", "peer", "pair", "role", "origin"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.peer_qubit is not None:
            out["peer_qubit"] = str(self.peer_qubit)
        if self.bits:
            out["bits"] = list(self.bits)
        if self.bit is not None:
            out["version"] = self.version
        return out


@dataclass(frozen=True)
class OutputBit:
    name: str
    node: str


@dataclass(frozen=True)
class InstructionSchedule:
    per_node: Mapping[str, tuple[Instruction, ...]]
    horizon: int
    outputs: tuple[OutputBit, ...] = ()
    qubits: tuple[QubitRef, ...] = ()
    latency: int = 1

    @property
    def node_order(self) -> tuple[str, ...]:
        return tuple(self.per_node)

    def __iter__(self) -> Iterator[Instruction]:
        """Instructions in canonical (tick, node, list position) order."""
        order = {n: i for i, n in enumerate(self.per_node)}
        keyed = [
            (ins.tick, order[node], pos, ins)
            for node, lst in self.per_node.items()
            for pos, ins in enumerate(lst)
        ]
        keyed.sort(key=lambda k: k[:3])
        return (k[3] for k in keyed)

    def __len__(self) -> int:
        return sum(len(v) for v in self.per_node.values())

    def with_program(self, program: int) -> "InstructionSchedule":
        per_node = {n: tuple(replace(i, program=program) for i in lst) for n, lst in self.per_node.items()}
        return replace(self, per_node=per_node)

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(i.to_dict(), sort_keys=True) for i in self)


_SEND_ROLE = {"ent_correction": ("ent_send", "ent_recv"), "dis_correction": ("dis_send", "dis_recv")}


def _instr_kind(gate: Gate) -> InstrKind:
    kind = gate.kind
    if kind in SINGLE_QUBIT_UNITARY:
        return InstrKind.SINGLE_GATE
    if kind in CONTROLLED:
        return InstrKind.TWO_QUBIT_GATE
    if kind is GateKind.MEASURE:
        return InstrKind.MEASURE
    if kind in CONDITIONAL:
        return InstrKind.COND_CORRECTION
    if kind is GateKind.RESET:
        return InstrKind.RESET
    if kind is GateKind.PREPARE:
        return InstrKind.PREPARE
    raise ValueError(f"no instruction kind for {kind.value}")


def compile_instructions(
    dcirc: DistributedCircuit | Circuit,
    topology: Topology | None = None,
    *,
    outputs: Sequence[str] | None = None,
    latency: int = 1,
) -> InstructionSchedule:
    """Timestamp every gate as soon as its qubits and classical inputs are ready.

    Each gate starts at the first tick at which all its qubits are free and
    occupies them for its node's gate time, so gates of one layer share a tick
    under unit times. A COND gate reading a bit measured on another node gets a
    CLASSICAL_SEND on the producing node at the tick the bit becomes available
    and a CLASSICAL_RECV ``latency`` ticks later on the consuming node. EPR_GEN
    becomes an EPR_SEND / EPR_RECV pair at one tick on both nodes. A REPORT per
    node hands the output bits to the controller once they are final.

    For a cat block with unit gate times, starting at tick t this yields:
    t EPR; t+1 CNOT(control, local); t+2 MEASURE(local); t+3 SEND; t+4 RECV and
    COND_X(remote); served gates; then H; MEASURE; SEND; RECV and COND_Z.
    """
    if latency < 1:
        raise TimingError(f"unsatisfiable timing: message latency must be >= 1, got {latency}")
    if isinstance(dcirc, DistributedCircuit):
        circuit, origins = dcirc.circuit, dcirc.origin
    else:
        circuit, origins = dcirc, tuple(Origin(gate=i) for i in range(len(dcirc.gates)))

    def duration(node: str, kind: GateKind) -> int:
        if topology is None or node not in topology:
            return DEFAULT_DURATION
        d = topology.spec(node).duration(kind.value)
        if d < 1:
            raise TimingError(f"unsatisfiable timing: {node} {kind.value} takes {d} ticks")
        return d

    qubit_ready: dict[QubitRef, int] = {}
    bit_ready: dict[str, int] = {}
    bit_node: dict[str, str] = {}
    bit_version: dict[str, int] = {}
    bit_last_read: dict[str, int] = {}
    delivered: dict[tuple[str, int, str], int] = {}
    emitted: list[Instruction] = []
    pair_id = 0

    def ready(qs: Iterable[QubitRef]) -> int:
        return max((qubit_ready.get(q, 0) for q in qs), default=0)

    for g, org in zip(circuit.gates, origins):
        role, src = org.role, org.gate
        if g.kind is GateKind.EPR_GEN:
            a, b = g.qubits
            start = ready(g.qubits)
            d = max(duration(a.node, g.kind), duration(b.node, g.kind))
            emitted.append(Instruction(start, a.node, InstrKind.EPR_SEND, (a,), g, peer=b.node,
                                       peer_qubit=b, pair=pair_id, role="epr_gen", duration=d))
            emitted.append(Instruction(start, b.node, InstrKind.EPR_RECV, (b,), g, peer=a.node,
                                       peer_qubit=a, pair=pair_id, role="epr_transmit", duration=d))
            pair_id += 1
            qubit_ready[a] = qubit_ready[b] = start + d
            continue

        node = g.qubits[0].node
        d = duration(node, g.kind)
        start = ready(g.qubits)
        if g.kind is GateKind.MEASURE:
            start = max(start, bit_last_read.get(g.bit, 0), bit_ready.get(g.bit, 0))
            bit_version[g.bit] = bit_version.get(g.bit, -1) + 1
            emitted.append(Instruction(start, node, InstrKind.MEASURE, g.qubits, g, bit=g.bit,
                                       bit_node=node, version=bit_version[g.bit], role=role,
                                       origin=src, duration=d))
            bit_ready[g.bit] = start + d
            bit_node[g.bit] = node
            qubit_ready[g.qubits[0]] = start + d
            continue
        if g.kind in CONDITIONAL:
            name = g.bit
            owner, ver = bit_node[name], bit_version[name]
            if owner == node:
                start = max(start, bit_ready[name])
            else:
                key = (name, ver, node)
                if key not in delivered:
                    send_tick = bit_ready[name]
                    send_role, recv_role = _SEND_ROLE.get(role, ("data_send", "data_recv"))
                    emitted.append(Instruction(send_tick, owner, InstrKind.CLASSICAL_SEND, bit=name,
                                               bit_node=owner, version=ver, peer=node, role=send_role,
                                               origin=src, duration=0))
                    emitted.append(Instruction(send_tick + latency, node, InstrKind.CLASSICAL_RECV,
                                               bit=name, bit_node=owner, version=ver, peer=owner,
                                               role=recv_role, origin=src, duration=0))
                    delivered[key] = send_tick + latency
                    bit_last_read[name] = max(bit_last_read.get(name, 0), send_tick)
                start = max(start, delivered[key])
            emitted.append(Instruction(start, node, InstrKind.COND_CORRECTION, g.qubits, g, bit=name,
                                       bit_node=owner, version=ver, role=role, origin=src, duration=d))
            bit_last_read[name] = max(bit_last_read.get(name, 0), start)
            qubit_ready[g.qubits[0]] = start + d
            continue
        emitted.append(Instruction(start, node, _instr_kind(g), g.qubits, g, role=role, origin=src,
                                   duration=d))
        for q in g.qubits:
            qubit_ready[q] = start + d

    out_names = tuple(outputs) if outputs is not None else tuple(
        b for b in circuit.measured_bits() if not b.startswith("__cat")
    )
    missing = [b for b in out_names if b not in bit_node]
    if missing:
        raise ValueError(f"output bits never measured: {missing}")
    out_bits = tuple(OutputBit(b, bit_node[b]) for b in out_names)
    by_node: dict[str, list[str]] = {}
    for ob in out_bits:
        by_node.setdefault(ob.node, []).append(ob.name)
    for node, names in by_node.items():
        tick = max(bit_ready[n] for n in names)
        emitted.append(Instruction(tick, node, InstrKind.REPORT, bits=tuple(names), role="report", duration=0))

    nodes: list[str] = []
    if topology is not None:
        nodes.extend(topology.node_ids)
    for ins in emitted:
        if ins.node not in nodes:
            nodes.append(ins.node)
    for q in circuit.qubits:
        if q.node not in nodes:
            nodes.append(q.node)
    per_node = {n: [] for n in nodes}
    for ins in emitted:
        per_node[ins.node].append(ins)
    frozen = {n: tuple(sorted(lst, key=lambda i: i.tick)) for n, lst in per_node.items()}
    horizon = max((i.tick for i in emitted), default=0)
    return InstructionSchedule(frozen, horizon, out_bits, tuple(circuit.qubits), latency)


def validate_schedule(schedule: InstructionSchedule) -> list[str]:
    """Check the structural invariants of a schedule; returns human-readable violations."""
    problems: list[str] = []
    sends: dict[tuple, int] = {}
    epr_send: dict[tuple[int, int], int] = {}
    for node, lst in schedule.per_node.items():
        ticks = [i.tick for i in lst]
        if ticks != sorted(ticks):
            problems.append(f"{node}: ticks not nondecreasing")
        for ins in lst:
            if ins.tick < 0:
                problems.append(f"{node}: negative tick {ins.tick}")
            for q in ins.qubits:
                if q.node != node:
                    problems.append(f"{node}: {ins.kind.value} touches remote qubit {q}")
            if ins.kind is InstrKind.CLASSICAL_SEND:
                sends[(ins.program, ins.bit, ins.version, node, ins.peer)] = ins.tick
            elif ins.kind is InstrKind.EPR_SEND:
                epr_send[(ins.program, ins.pair)] = ins.tick
    for node, lst in schedule.per_node.items():
        for ins in lst:
            if ins.kind is InstrKind.CLASSICAL_RECV:
                key = (ins.program, ins.bit, ins.version, ins.peer, node)
                if key not in sends:
                    problems.append(f"{node}: receive of {ins.bit} at tick {ins.tick} has no send")
                elif sends[key] >= ins.tick:
                    problems.append(f"{node}: receive of {ins.bit} at tick {ins.tick} not after send at {sends[key]}")
            elif ins.kind is InstrKind.EPR_RECV:
                t = epr_send.get((ins.program, ins.pair))
                if t != ins.tick:
                    problems.append(f"{node}: EPR_RECV pair {ins.pair} at {ins.tick} but send at {t}")
    return problems
