"""Lock-step execution of instruction schedules on simulated computing nodes."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from ..backend import PauliString, StateVector, apply_gate, gen_epr, make_rng
from ..circuit import QubitRef, single_qubit_matrix
from ..errors import CapacityError, MessageError
from ..topology import Topology
from .instructions import Instruction, InstrKind, InstructionSchedule

# instructions whose effect does not depend on randomness or classical data
_DETERMINISTIC = {InstrKind.SINGLE_GATE, InstrKind.TWO_QUBIT_GATE, InstrKind.EPR_SEND, InstrKind.EPR_RECV}


class Clock:
    """Shared logical clock. Only the simulation advances it, after every node has finished the tick."""

    def __init__(self) -> None:
        self.tick = 0

    def advance(self) -> None:
        self.tick += 1

    def reset(self) -> None:
        self.tick = 0


class ClassicalChannel:
    """Point-to-point mailbox; a message sent at tick t is readable from t + latency."""

    def __init__(self, latency: int = 1) -> None:
        self.latency = latency
        self._box: dict[tuple, tuple[int, int]] = {}

    def clear(self) -> None:
        self._box.clear()

    def send(self, key: tuple, value: int, tick: int) -> None:
        self._box[key] = (tick + self.latency, value)

    def receive(self, key: tuple, tick: int) -> int:
        if key not in self._box:
            raise MessageError(f"message never arrives: {key} at tick {tick}")
        arrival, value = self._box[key]
        if arrival > tick:
            raise MessageError(f"message never arrives: {key} read at tick {tick} but arrives at {arrival}")
        return value


@dataclass
class Job:
    """One program's compiled schedule and how to run it."""

    program: int
    schedule: InstructionSchedule
    shots: int = 1
    observable: PauliString | None = None
    exact: bool = False

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if any(i.program != self.program for i in self.schedule):
            self.schedule = self.schedule.with_program(self.program)


@dataclass
class Outcome:
    """What one program produced over its repetitions.

    ``counts`` maps output bitstrings (ordered as ``outputs``) to how often
    they occurred, so they sum to ``shots``.
    """

    program: int
    counts: dict[str, int]
    shots: int
    outputs: tuple[str, ...] = ()
    expectations: dict[str, float] = field(default_factory=dict)
    last_bits: dict[str, int] = field(default_factory=dict)

    @property
    def expectation(self) -> float | None:
        return self.expectations.get("expectation")

    def to_dict(self) -> dict:
        return {
            "program": self.program,
            "shots": self.shots,
            "outputs": list(self.outputs),
            "counts": dict(sorted(self.counts.items())),
            "expectations": self.expectations,
            "last_bits": self.last_bits,
        }


@dataclass
class ExecutionResult:
    outcomes: list[Outcome]
    trace: list[dict]
    final_states: dict[int, StateVector] = field(default_factory=dict)

    def trace_jsonl(self) -> str:
        return trace_to_jsonl(self.trace)


def trace_to_jsonl(trace: Iterable[dict]) -> str:
    return "".join(json.dumps(rec, sort_keys=True, separators=(",", ":")) + "\n" for rec in trace)


def parity_expectation(counts: dict[str, int]) -> float:
    """Mean of (-1)^(number of ones) over the recorded bitstrings."""
    total = sum(counts.values())
    return sum(n * (-1) ** s.count("1") for s, n in counts.items()) / total


class ComputingNode:
    """Holds its instruction list and classical registers; executes one tick at a time."""

    def __init__(self, node_id: str, index: int, instructions: Sequence[Instruction]) -> None:
        self.node_id = node_id
        self.index = index
        self.instructions = list(instructions)
        self.registers: dict[tuple[int, str, str], int] = {}
        self._pc = 0

    def start_shot(self) -> None:
        self.registers.clear()
        self._pc = 0

    def run_tick(self, tick: int, sim: "Simulation") -> None:
        while self._pc < len(self.instructions) and self.instructions[self._pc].tick == tick:
            pos = self._pc
            self._pc += 1
            sim.execute_instruction(self, pos, self.instructions[pos])


class Simulation:
    """Runs a set of jobs together on one cluster under a shared clock.

    Each job keeps its own statevector; jobs in one round never share qubits,
    so their states stay separate products. Randomness is one Philox stream
    consumed in canonical (tick, node, list position) order.
    """

    def __init__(
        self,
        jobs: Sequence[Job],
        topology: Topology | None = None,
        *,
        strict: bool = False,
        trace_shots: int | None = 1,
        capture_state: bool = False,
    ) -> None:
        self.jobs = {j.program: j for j in jobs}
        if len(self.jobs) != len(jobs):
            raise ValueError("duplicate program index among jobs")
        self.topology = topology
        self.trace_shots = trace_shots
        self.capture_state = capture_state
        latencies = {j.schedule.latency for j in jobs}
        if len(latencies) > 1:
            raise ValueError("jobs compiled with different latencies")
        self.channel = ClassicalChannel(latencies.pop() if latencies else 1)
        self.clock = Clock()

        owner: dict[QubitRef, int] = {}
        for j in jobs:
            for q in j.schedule.qubits:
                if q in owner:
                    raise ValueError(f"qubit {q} shared by programs {owner[q]} and {j.program}")
                owner[q] = j.program
        if strict and topology is not None:
            for q in owner:
                if q.node in topology and q.index >= topology.capacity(q.node):
                    raise CapacityError(f"capacity exceeded: {q} beyond {q.node}'s {topology.capacity(q.node)} qubits")

        node_ids: list[str] = list(topology.node_ids) if topology is not None else []
        for j in jobs:
            for n in j.schedule.node_order:
                if n not in node_ids:
                    node_ids.append(n)
        self.nodes = []
        for idx, n in enumerate(node_ids):
            lst = [ins for j in jobs for ins in j.schedule.per_node.get(n, ())]
            lst.sort(key=lambda i: i.tick)
            self.nodes.append(ComputingNode(n, idx, lst))
        self.horizon = max((j.schedule.horizon for j in jobs), default=0)
        self._build_prefix()

    def _build_prefix(self) -> None:
        """Find each job's leading run of deterministic instructions and simulate it once."""
        self.skip: dict[int, set[int]] = {}
        self.prefix_state: dict[int, StateVector] = {}
        self.prefix_pairs: dict[int, set[int]] = {}
        for p, job in self.jobs.items():
            state = StateVector(job.schedule.qubits)
            skip: set[int] = set()
            pairs: set[int] = set()
            for ins in job.schedule:
                if ins.kind not in _DETERMINISTIC:
                    break
                self._apply_deterministic(state, ins, pairs)
                skip.add(id(ins))
            self.skip[p] = skip
            self.prefix_state[p] = state
            self.prefix_pairs[p] = pairs

    @staticmethod
    def _apply_deterministic(state: StateVector, ins: Instruction, pairs: set[int]) -> None:
        if ins.kind in (InstrKind.EPR_SEND, InstrKind.EPR_RECV):
            if ins.pair not in pairs:
                pairs.add(ins.pair)
                a, b = (ins.qubits[0], ins.peer_qubit) if ins.kind is InstrKind.EPR_SEND else (ins.peer_qubit, ins.qubits[0])
                gen_epr(state, a, b)
        else:
            apply_gate(state, ins.gate)

    def execute_instruction(self, node: ComputingNode, pos: int, ins: Instruction) -> None:
        p = ins.program
        if self.shot >= self.jobs[p].shots:
            return
        value: int | None = None
        skipped = id(ins) in self.skip[p]
        if not skipped:
            state = self.states[p]
            kind = ins.kind
            if kind in _DETERMINISTIC:
                self._apply_deterministic(state, ins, self.pairs[p])
            elif kind is InstrKind.PREPARE or kind is InstrKind.RESET:
                apply_gate(state, ins.gate, self.rng)
            elif kind is InstrKind.MEASURE:
                value = state.measure(ins.qubits[0], self.rng)
                node.registers[(p, node.node_id, ins.bit)] = value
            elif kind is InstrKind.CLASSICAL_SEND:
                value = node.registers[(p, node.node_id, ins.bit)]
                self.channel.send((p, ins.bit, ins.version, node.node_id, ins.peer), value, ins.tick)
            elif kind is InstrKind.CLASSICAL_RECV:
                value = self.channel.receive((p, ins.bit, ins.version, ins.peer, node.node_id), ins.tick)
                node.registers[(p, ins.peer, ins.bit)] = value
            elif kind is InstrKind.COND_CORRECTION:
                key = (p, ins.bit_node, ins.bit)
                if key not in node.registers:
                    raise MessageError(f"message never arrives: {ins.bit} from {ins.bit_node} not at {node.node_id}")
                value = node.registers[key]
                if value:
                    state.apply_single(single_qubit_matrix(ins.gate), ins.qubits[0])
            elif kind is InstrKind.REPORT:
                for b in ins.bits:
                    self.reports[p][b] = node.registers[(p, node.node_id, b)]
        if self.trace_shots is None or self.shot < self.trace_shots:
            rec: dict[str, Any] = {
                "shot": self.shot,
                "tick": ins.tick,
                "node": node.node_id,
                "node_index": node.index,
                "seq": pos,
                "program": p,
                "kind": ins.kind.value,
            }
            if ins.qubits:
                rec["qubits"] = [str(q) for q in ins.qubits]
            if ins.gate is not None:
                rec["gate"] = ins.gate.kind.value
            for key in ("bit", "bit_node", "peer", "pair", "role", "origin"):
                val = getattr(ins, key)
                if val is not None:
                    rec[key] = val
            if ins.bit is not None:
                rec["version"] = ins.version
            if ins.bits:
                rec["bits"] = list(ins.bits)
            if value is not None:
                rec["value"] = value
            self.trace.append(rec)

    def run(self, seed: int | np.random.Generator) -> ExecutionResult:
        self.rng = make_rng(seed)
        self.trace: list[dict] = []
        counts: dict[int, Counter] = {p: Counter() for p in self.jobs}
        last: dict[int, dict[str, int]] = {}
        final: dict[int, StateVector] = {}
        exact_vals: dict[int, float] = {}
        max_shots = max((j.shots for j in self.jobs.values()), default=0)
        for shot in range(max_shots):
            self.shot = shot
            active = [p for p, j in self.jobs.items() if shot < j.shots]
            self.states = {p: self.prefix_state[p].copy() for p in active}
            self.pairs = {p: set(self.prefix_pairs[p]) for p in active}
            self.reports = {p: {} for p in active}
            self.channel.clear()
            self.clock.reset()
            for n in self.nodes:
                n.start_shot()
            horizon = max(self.jobs[p].schedule.horizon for p in active)
            while self.clock.tick <= horizon:
                for n in self.nodes:
                    n.run_tick(self.clock.tick, self)
                self.clock.advance()
            for p in active:
                job = self.jobs[p]
                outs = job.schedule.outputs
                bits = self.reports[p]
                counts[p]["".join(str(bits[o.name]) for o in outs)] += 1
                last[p] = {o.name: bits[o.name] for o in outs}
                if shot == 0:
                    if job.exact:
                        exact_vals[p] = self.states[p].expectation(job.observable)
                    if self.capture_state:
                        final[p] = self.states[p]
        outcomes = []
        for p, job in self.jobs.items():
            names = tuple(o.name for o in job.schedule.outputs)
            exps: dict[str, float] = {}
            if job.exact:
                exps["expectation"] = exact_vals[p]
            elif job.observable is not None:
                exps["expectation"] = parity_expectation(counts[p])
            outcomes.append(Outcome(p, dict(counts[p]), job.shots, names, exps, last[p]))
        return ExecutionResult(outcomes, self.trace, final)


def execute(
    schedule: InstructionSchedule | Sequence[Job],
    repetitions: int = 1,
    seed: int | np.random.Generator = 0,
    *,
    topology: Topology | None = None,
    observable: PauliString | None = None,
    exact: bool = False,
    strict: bool = False,
    trace_shots: int | None = 1,
    capture_state: bool = False,
) -> ExecutionResult:
    """Run a schedule (or several jobs sharing one clock) ``repetitions`` times.

    Every shot starts from |0...0> and runs ticks 0..horizon; at each tick the
    nodes execute their instructions in node order, then list order. The RNG
    stream continues across shots. Only the first ``trace_shots`` shots are
    traced (``None`` traces all).
    """
    if isinstance(schedule, InstructionSchedule):
        jobs = [Job(0, schedule, repetitions, observable, exact)]
    else:
        jobs = list(schedule)
    sim = Simulation(jobs, topology, strict=strict, trace_shots=trace_shots, capture_state=capture_state)
    return sim.run(seed)


def validate_trace(trace: Sequence[dict]) -> list[str]:
    """Check causality, lock-step ordering and round isolation of an execution trace.

    Returns human-readable violations; an empty list means the trace is sound.
    """
    problems: list[str] = []
    sends: dict[tuple, int] = {}
    owner: dict[str, int] = {}
    prev: tuple | None = None
    for rec in trace:
        key = (rec["shot"], rec["tick"], rec["node_index"], rec["seq"])
        if prev is not None and key <= prev:
            problems.append(f"out of order: {key} after {prev}")
        prev = key
        for q in rec.get("qubits", ()):
            if owner.setdefault(q, rec["program"]) != rec["program"]:
                problems.append(f"qubit {q} used by programs {owner[q]} and {rec['program']}")
        kind = rec["kind"]
        if kind == "CLASSICAL_SEND":
            sends[(rec["shot"], rec["program"], rec["bit"], rec["version"], rec["node"], rec["peer"])] = rec["tick"]
        elif kind == "CLASSICAL_RECV" or (kind == "COND_CORRECTION" and rec["bit_node"] != rec["node"]):
            src = rec["peer"] if kind == "CLASSICAL_RECV" else rec["bit_node"]
            k = (rec["shot"], rec["program"], rec["bit"], rec["version"], src, rec["node"])
            t = sends.get(k)
            if t is None:
                problems.append(f"{kind} of {rec['bit']} at tick {rec['tick']} on {rec['node']} has no send")
            elif t >= rec["tick"]:
                problems.append(f"{kind} of {rec['bit']} at tick {rec['tick']} reads a send at tick {t}")
    return problems
