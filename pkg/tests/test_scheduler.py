import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qdistsim.circuit import Circuit, QubitRef, cnot, h, vq
from qdistsim.errors import TimingError, UnschedulableError
from qdistsim.scheduler import (
    Allocation,
    Program,
    RandomAllocator,
    allocate_greedy,
    allocate_random,
    build_parallel_program,
    free_slots,
)
from qdistsim.topology import QpuSpec, Topology


def chain(w):
    return Circuit([h(vq(0))] + [cnot(vq(i), vq(i + 1)) for i in range(w - 1)], [vq(i) for i in range(w)])


def ten_chains():
    topo = Topology.from_sizes([10, 10])
    return topo, build_parallel_program(topo, [Program(chain(4)) for _ in range(10)])


def test_greedy_ten_chains_allocations():
    free = free_slots([10, 10])
    allocs = []
    for _ in range(5):
        a = allocate_greedy(free, 4)
        for q in a.slots:
            free[q.node].remove(q.index)
        allocs.append(a)
    assert [a.nodes for a in allocs] == [("QPU_0",), ("QPU_0",), ("QPU_0", "QPU_1"), ("QPU_1",), ("QPU_1",)]
    assert allocs[2].slots == (QubitRef("QPU_0", 8), QubitRef("QPU_0", 9), QubitRef("QPU_1", 0), QubitRef("QPU_1", 1))
    assert [a.is_distributed for a in allocs] == [False, False, True, False, False]


def test_greedy_insufficient():
    assert allocate_greedy([3], 4) is None


def test_greedy_forced_fill():
    a = allocate_greedy([2, 2], 4)
    assert a.slots == (QubitRef("QPU_0", 0), QubitRef("QPU_0", 1), QubitRef("QPU_1", 0), QubitRef("QPU_1", 1))


def test_random_allocator():
    assert allocate_random([1, 2], 4, seed=1) is None
    a = allocate_random([1, 1], 2, seed=5)
    assert set(a.slots) == {QubitRef("QPU_0", 0), QubitRef("QPU_1", 0)}
    assert allocate_random([4, 4], 3, seed=9) == allocate_random([4, 4], 3, seed=9)
    r1, r2 = RandomAllocator(2), RandomAllocator(2)
    assert [r1([5, 5], 3) for _ in range(3)] == [r2([5, 5], 3) for _ in range(3)]


def test_ten_chains_schedule():
    _, pp = ten_chains()
    assert pp.schedule.one_based() == [[[1, 2, 3], [3, 4, 5]], [[6, 7, 8], [8, 9, 10]]]
    assert pp.distributed() == (2, 7)
    pp.check()


def test_single_program_one_round():
    topo = Topology.from_sizes([10, 10])
    pp = build_parallel_program(topo, [Program(chain(3))])
    assert pp.schedule.one_based() == [[[1], []]]
    assert pp.distributed() == ()


def test_unschedulable():
    topo = Topology.from_sizes([2, 2])
    with pytest.raises(UnschedulableError, match="unschedulable"):
        build_parallel_program(topo, [Program(chain(5))])


def test_allocation_must_be_injective():
    with pytest.raises(ValueError):
        Allocation({vq(0): QubitRef("A", 0), vq(1): QubitRef("A", 0)})


@settings(max_examples=60, deadline=None)
@given(
    sizes=st.lists(st.integers(1, 6), min_size=1, max_size=4),
    widths=st.lists(st.integers(1, 8), min_size=1, max_size=12),
    use_random=st.booleans(),
)
def test_schedule_properties(sizes, widths, use_random):
    topo = Topology.from_sizes(sizes)
    progs = [Program(chain(w)) for w in widths]
    allocator = RandomAllocator(0) if use_random else allocate_greedy
    if max(widths) > sum(sizes):
        with pytest.raises(UnschedulableError):
            build_parallel_program(topo, progs, allocator)
        return
    pp = build_parallel_program(topo, progs, allocator)
    pp.check()
    for i in range(pp.schedule.r):
        members = pp.schedule.programs_in_round(i)
        assert sum(widths[j] for j in members) <= sum(sizes)
        slots = [q for j in members for q in pp.allocations[j].slots]
        assert len(slots) == len(set(slots))
        assert all(q.index < topo.capacity(q.node) for q in slots)
    if not use_random:
        assert build_parallel_program(topo, progs) == pp


def test_schedule_json():
    _, pp = ten_chains()
    data = json.loads(pp.schedule.to_json())
    assert data["rounds"][1] == [[6, 7, 8], [8, 9, 10]]


def test_topology_roundtrip(tmp_path):
    topo = Topology([QpuSpec("QPU_0", 3, {"h": 2}), QpuSpec("QPU_1", 2)])
    path = tmp_path / "topo.json"
    path.write_text(json.dumps(topo.to_dict()))
    back = Topology.load(path)
    assert back == topo
    assert back.spec("QPU_0").duration("H") == 2
    assert back.spec("QPU_1").duration("CNOT") == 1
    assert back.total_qubits == 5


@pytest.mark.parametrize("bad", [0, -1, 1.5])
def test_topology_rejects_bad_gate_time(bad):
    with pytest.raises(TimingError, match="unsatisfiable timing"):
        QpuSpec("QPU_0", 2, {"H": bad})


def test_topology_rejects_duplicates_and_empty_qpus():
    with pytest.raises(ValueError):
        Topology([QpuSpec("A", 1), QpuSpec("A", 2)])
    with pytest.raises(ValueError):
        QpuSpec("A", 0)


def test_program_defaults():
    c = Circuit([h(vq(0))])
    assert Program(c).outputs == ()
    with pytest.raises(ValueError):
        Program(c, repetitions=0)
    with pytest.raises(ValueError):
        Program(c, exact=True)
