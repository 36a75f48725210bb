"""Qubit allocation and round scheduling of parallel programs.

A round packs as many programs as fit into the cluster at once; a program whose
qubits land on two or more QPUs is a distributed program and appears in the
set of every QPU it touches.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np

from .backend import PauliString
from .circuit import Circuit, QubitRef, vq
from .errors import UnschedulableError
from .topology import Topology

FreeSlots = dict[str, list[int]]


@dataclass(frozen=True)
class Allocation:
    """Injective map from a program's qubits to physical (node, slot) refs."""

    mapping: Mapping[QubitRef, QubitRef]

    def __post_init__(self) -> None:
        mapping = dict(self.mapping)
        if len(set(mapping.values())) != len(mapping):
            raise ValueError("allocation is not injective")
        object.__setattr__(self, "mapping", mapping)

    @classmethod
    def from_slots(cls, slots: Sequence[QubitRef], keys: Sequence[QubitRef] | None = None) -> "Allocation":
        keys = [vq(i) for i in range(len(slots))] if keys is None else list(keys)
        if len(keys) != len(slots):
            raise ValueError(f"{len(keys)} qubits but {len(slots)} slots")
        return cls(dict(zip(keys, slots)))

    @classmethod
    def identity(cls, qubits: Iterable[QubitRef]) -> "Allocation":
        """For circuits that already address physical qubits."""
        return cls({q: q for q in qubits})

    def __getitem__(self, key: int | QubitRef) -> QubitRef:
        if isinstance(key, int):
            key = vq(key)
        return self.mapping[key]

    def __len__(self) -> int:
        return len(self.mapping)

    def __contains__(self, key: object) -> bool:
        return key in self.mapping

    @property
    def slots(self) -> tuple[QubitRef, ...]:
        return tuple(self.mapping.values())

    @property
    def nodes(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(q.node for q in self.slots))

    @property
    def is_distributed(self) -> bool:
        return len(self.nodes) > 1

    def rekey(self, keys: Sequence[QubitRef]) -> "Allocation":
        return Allocation.from_slots(self.slots, keys)

    def to_dict(self) -> dict:
        return {str(k): {"node": v.node, "index": v.index} for k, v in self.mapping.items()}


def free_slots(free: Topology | Mapping[str, int | Sequence[int]] | Sequence[int]) -> FreeSlots:
    """Normalize the free-capacity description to ``{node: sorted free indices}``.

    Accepts a Topology (everything free), a mapping from node to a count or to
    explicit indices, or a bare list of counts for nodes QPU_0, QPU_1, ...
    """
    if isinstance(free, Topology):
        return {q.node_id: list(range(q.num_qubits)) for q in free.qpus}
    if not isinstance(free, Mapping):
        free = {f"QPU_{i}": n for i, n in enumerate(free)}
    out: FreeSlots = {}
    for node, v in free.items():
        out[node] = list(range(v)) if isinstance(v, (int, np.integer)) else sorted(int(i) for i in v)
    return out


def allocate_greedy(free, w: int) -> Allocation | None:
    """Fill QPUs in order, lowest free slot first, spilling onto the next QPU."""
    if w < 1:
        raise ValueError("width must be >= 1")
    slots = free_slots(free)
    if sum(len(v) for v in slots.values()) < w:
        return None
    chosen: list[QubitRef] = []
    for node, indices in slots.items():
        for i in indices:
            if len(chosen) == w:
                break
            chosen.append(QubitRef(node, i))
    return Allocation.from_slots(chosen)


def allocate_random(free, w: int, seed: int | np.random.Generator) -> Allocation | None:
    """Draw ``w`` distinct free slots uniformly; reproducible for a given seed."""
    if w < 1:
        raise ValueError("width must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pool = [QubitRef(node, i) for node, idx in free_slots(free).items() for i in idx]
    if len(pool) < w:
        return None
    picks = rng.choice(len(pool), size=w, replace=False)
    return Allocation.from_slots([pool[int(i)] for i in picks])


class RandomAllocator:
    """Stateful random allocator: successive calls continue one seeded stream."""

    def __init__(self, seed: int) -> None:
        self.rng = np.random.default_rng(seed)

    def __call__(self, free, w: int) -> Allocation | None:
        return allocate_random(free, w, self.rng)


Allocator = Callable[[FreeSlots, int], "Allocation | None"]


@dataclass(frozen=True)
class Program:
    """A monolithic circuit plus how to run and read it.

    Args:
        circuit: circuit over abstract qubits ``vq(0) .. vq(w-1)``.
        repetitions: number of shots N.
        outputs: bit names forming the output bitstring, in order. Defaults to
            every measured bit in first-write order.
        observable: Pauli string over the abstract qubits. In exact mode its
            expectation is read from the final state; otherwise the estimate is
            the mean parity of the output bits.
        exact: read ``observable`` exactly instead of sampling.
    """

    circuit: Circuit
    repetitions: int = 1
    outputs: tuple[str, ...] | None = None
    observable: PauliString | None = None
    exact: bool = False
    name: str = ""

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.outputs is None:
            object.__setattr__(self, "outputs", self.circuit.measured_bits())
        else:
            object.__setattr__(self, "outputs", tuple(self.outputs))
        if self.exact and self.observable is None:
            raise ValueError("exact mode needs an observable")

    @property
    def width(self) -> int:
        return self.circuit.width

    @property
    def qubit_order(self) -> tuple[QubitRef, ...]:
        return tuple(sorted(self.circuit.qubits))


@dataclass(frozen=True)
class Schedule:
    """``rounds[i][k]`` is the set of (0-based) programs running on QPU k in round i."""

    rounds: tuple[tuple[frozenset[int], ...], ...]
    node_ids: tuple[str, ...]

    @property
    def r(self) -> int:
        return len(self.rounds)

    def __getitem__(self, i: int) -> tuple[frozenset[int], ...]:
        return self.rounds[i]

    def programs_in_round(self, i: int) -> list[int]:
        return sorted(set().union(*self.rounds[i]))

    def round_of(self, program: int) -> int:
        for i, sets in enumerate(self.rounds):
            if any(program in s for s in sets):
                return i
        raise KeyError(program)

    def one_based(self) -> list[list[list[int]]]:
        """Round sets with 1-based program numbers, as written in reports."""
        return [[sorted(j + 1 for j in s) for s in sets] for sets in self.rounds]

    def to_json(self) -> str:
        return json.dumps({"nodes": list(self.node_ids), "rounds": self.one_based()})


@dataclass(frozen=True)
class ParallelProgram:
    programs: tuple[Program, ...]
    schedule: Schedule
    merge: Any
    allocations: tuple[Allocation, ...]

    @property
    def n(self) -> int:
        return len(self.programs)

    def distributed(self) -> tuple[int, ...]:
        """0-based indices of programs spanning two or more QPUs."""
        return tuple(j for j, a in enumerate(self.allocations) if a.is_distributed)

    def check(self) -> None:
        """Assert the structural invariants; raises AssertionError on violation."""
        k = len(self.schedule.node_ids)
        seen: dict[int, int] = {}
        for i, sets in enumerate(self.schedule.rounds):
            assert len(sets) == k, f"round {i} has {len(sets)} sets for {k} QPUs"
            for j in set().union(*sets):
                assert j not in seen, f"program {j + 1} in rounds {seen[j]} and {i}"
                seen[j] = i
        assert set(seen) == set(range(self.n)), "not every program is scheduled"
        for j, a in enumerate(self.allocations):
            sets = self.schedule.rounds[seen[j]]
            in_sets = sum(j in s for s in sets)
            assert (in_sets >= 2) == a.is_distributed, f"distribution flag mismatch for program {j + 1}"


def build_parallel_program(
    topology: Topology,
    programs: Sequence[Program],
    allocator: Allocator = allocate_greedy,
    merge: Any = None,
) -> ParallelProgram:
    """Pack programs into rounds, allocating qubits with ``allocator``.

    Programs are taken in order. Each is allocated within what is left of the
    current round; when that fails the round is closed, capacity is fully
    restored and the program is allocated again in a fresh round. A program
    wider than the whole cluster raises :class:`UnschedulableError`.
    """
    programs = tuple(programs)
    total = topology.total_qubits
    node_ids = topology.node_ids
    rounds: list[tuple[frozenset[int], ...]] = []
    allocations: list[Allocation | None] = [None] * len(programs)
    current: list[int] = []
    free = free_slots(topology)

    def close_round() -> None:
        sets = [set() for _ in node_ids]
        for j in current:
            for node in allocations[j].nodes:
                sets[node_ids.index(node)].add(j)
        rounds.append(tuple(frozenset(s) for s in sets))
        current.clear()

    for j, prog in enumerate(programs):
        w = prog.width
        if w > total:
            raise UnschedulableError(
                f"unschedulable: program {j + 1} needs {w} qubits, cluster has {total}"
            )
        alloc = allocator(free, w)
        if alloc is None:
            close_round()
            free = free_slots(topology)
            alloc = allocator(free, w)
            if alloc is None:
                raise UnschedulableError(f"unschedulable: allocator found no slots for program {j + 1}")
        for q in alloc.slots:
            free[q.node].remove(q.index)
        allocations[j] = alloc.rekey(prog.qubit_order)
        current.append(j)
    if current:
        close_round()
    return ParallelProgram(programs, Schedule(tuple(rounds), node_ids), merge, tuple(allocations))
