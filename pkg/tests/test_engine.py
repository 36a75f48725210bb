from dataclasses import replace

import numpy as np
import pytest

from qdistsim.algorithms.qpe import phase_unitary, qpe_parallel_program, qpe_topology
from qdistsim.backend import PauliString
from qdistsim.circuit import Circuit, QubitRef, cnot, h, measure, vq, x
from qdistsim.engine import (
    BitAssembly,
    Identity,
    InstrKind,
    InstructionSchedule,
    Job,
    MaxLikelihoodPhase,
    NearestCentroid,
    Outcome,
    WeightedSum,
    assemble_bits,
    compile_instructions,
    execute,
    merge,
    run_parallel,
    run_sequential,
    validate_schedule,
    validate_trace,
)
from qdistsim.errors import CapacityError, MergeArityError, MessageError, TimingError
from qdistsim.remapper import remap
from qdistsim.scheduler import Program, build_parallel_program
from qdistsim.topology import QpuSpec, Topology

A0, A1, B0, B1 = QubitRef("QPU_0", 0), QubitRef("QPU_0", 1), QubitRef("QPU_1", 0), QubitRef("QPU_1", 1)
TOPO = Topology.from_sizes([2, 2])


def fig1(prep_control=True):
    gates = ([x(A0)] if prep_control else []) + [cnot(A0, B0), measure(A0, "a"), measure(B0, "b")]
    return remap(Circuit(gates), None, TOPO)


def test_single_h():
    s = compile_instructions(Circuit([h(A0)]), TOPO)
    assert len(s) == 1 and s.horizon == 0
    (ins,) = list(s)
    assert (ins.tick, ins.node, ins.kind) == (0, "QPU_0", InstrKind.SINGLE_GATE)


def test_parallel_gates_same_tick():
    s = compile_instructions(Circuit([h(A0), x(B0)]), TOPO)
    assert [i.tick for i in s.per_node["QPU_0"]] == [0]
    assert [i.tick for i in s.per_node["QPU_1"]] == [0]


def test_cat_block_tick_pattern():
    s = compile_instructions(fig1(prep_control=False), TOPO)
    assert validate_schedule(s) == []
    seq = [(i.tick, i.node, i.role) for i in s if i.role not in (None, "report")]
    assert seq == [
        (0, "QPU_0", "epr_gen"), (0, "QPU_1", "epr_transmit"),
        (1, "QPU_0", "ent_cnot"), (2, "QPU_0", "ent_measure"),
        (3, "QPU_0", "ent_send"), (3, "QPU_0", "reset_local"),
        (4, "QPU_1", "ent_recv"), (4, "QPU_1", "ent_correction"),
        (5, "QPU_1", "served"), (6, "QPU_1", "dis_h"), (7, "QPU_1", "dis_measure"),
        (8, "QPU_1", "dis_send"), (8, "QPU_1", "reset_remote"),
        (9, "QPU_0", "dis_recv"), (9, "QPU_0", "dis_correction"),
    ]
    send = next(i for i in s if i.role == "ent_send")
    recv = next(i for i in s if i.role == "ent_recv")
    assert send.node == "QPU_0" and recv.node == "QPU_1" and send.tick < recv.tick


def test_gate_times_stretch_schedule():
    slow = Topology([QpuSpec("QPU_0", 2, {"H": 3}), QpuSpec("QPU_1", 2)])
    s = compile_instructions(Circuit([h(A0), x(A0), h(B0)]), slow)
    assert [i.tick for i in s.per_node["QPU_0"]] == [0, 3]


def test_latency_must_be_positive():
    with pytest.raises(TimingError, match="unsatisfiable timing"):
        compile_instructions(fig1(), TOPO, latency=0)


def test_longer_latency_delays_receive():
    s = compile_instructions(fig1(), TOPO, latency=3)
    send = next(i for i in s if i.role == "ent_send")
    recv = next(i for i in s if i.role == "ent_recv")
    assert recv.tick - send.tick == 3
    res = execute(s, 10, seed=0, topology=TOPO)
    assert res.outcomes[0].counts == {"11": 10}


def test_fig1_execution():
    res = execute(compile_instructions(fig1(), TOPO), 100, seed=1, topology=TOPO)
    assert res.outcomes[0].counts == {"11": 100}
    assert validate_trace(res.trace) == []


def test_lockstep_order_in_trace():
    res = execute(compile_instructions(fig1(), TOPO), 3, seed=2, topology=TOPO, trace_shots=None)
    keys = [(r["shot"], r["tick"], r["node_index"], r["seq"]) for r in res.trace]
    assert keys == sorted(keys)
    assert len({r["shot"] for r in res.trace}) == 3


def test_qpe_demo_modal_outcome():
    pp = qpe_parallel_program(3, phase_unitary(1 / 3), 1000)
    res = run_parallel(pp, qpe_topology(3), seed=7)
    counts = res.outcomes[0].counts
    assert max(counts, key=counts.get) == "011"
    assert res.value == 0.375
    assert sum(counts.values()) == 1000


def test_determinism():
    s = compile_instructions(fig1(prep_control=False), TOPO)
    circ = Circuit([h(A0), cnot(A0, B0), h(B0), measure(A0, "a"), measure(B0, "b")])
    s = compile_instructions(remap(circ, None, TOPO), TOPO)
    r1 = execute(s, 200, seed=5, topology=TOPO, trace_shots=None)
    r2 = execute(s, 200, seed=5, topology=TOPO, trace_shots=None)
    assert r1.trace_jsonl() == r2.trace_jsonl()
    assert r1.outcomes == r2.outcomes
    r3 = execute(s, 200, seed=6, topology=TOPO, trace_shots=None)
    assert r3.trace_jsonl() != r1.trace_jsonl()


def test_message_never_arrives():
    s = compile_instructions(fig1(), TOPO)
    broken = {n: tuple(i for i in lst if i.kind is not InstrKind.CLASSICAL_SEND) for n, lst in s.per_node.items()}
    bad = replace(s, per_node=broken)
    assert any("no send" in p for p in validate_schedule(bad))
    with pytest.raises(MessageError, match="message never arrives"):
        execute(bad, 1, seed=0, topology=TOPO)


def test_early_receive_is_rejected():
    s = compile_instructions(fig1(), TOPO)
    moved = {
        n: tuple(replace(i, tick=i.tick - 1) if i.kind is InstrKind.CLASSICAL_RECV and i.role == "ent_recv" else i
                 for i in lst)
        for n, lst in s.per_node.items()
    }
    bad = replace(s, per_node=moved)
    assert any("not after send" in p for p in validate_schedule(bad))
    with pytest.raises(MessageError):
        execute(bad, 1, seed=0, topology=TOPO)


def test_strict_capacity():
    topo = Topology.from_sizes([1, 1])
    with pytest.warns(Warning):
        dc = remap(Circuit([cnot(A0, B0)]), None, topo)
    with pytest.raises(CapacityError, match="capacity exceeded"):
        execute(compile_instructions(dc, topo), 1, seed=0, topology=topo, strict=True)


def test_merge_examples():
    assert merge(WeightedSum((0.5, -0.2)), [1.0, 0.0]) == 0.5
    assert assemble_bits({"q0": 0, "q1": 1, "q2": 1}, ["q0", "q1", "q2"]) == 0.375
    out = Outcome(0, {"011": 700, "010": 300}, 1000, ("q0", "q1", "q2"))
    assert merge(BitAssembly(("q0", "q1", "q2")), [out]) == 0.375
    assert merge(Identity(), [out]) is out
    # overlaps 0.9 and 0.1: the first centroid is nearer
    assert merge(NearestCentroid(2), [0.9, 0.1]) == [0]
    assert merge(NearestCentroid(2), [0.5, 0.5]) == [0]


def test_bit_assembly_uses_output_names():
    out = Outcome(0, {"110": 10}, 10, ("q2", "q1", "q0"))
    assert merge(BitAssembly(("q0", "q1", "q2")), [out]) == 0.375


def test_merge_arity():
    with pytest.raises(MergeArityError, match="arity mismatch"):
        merge(WeightedSum((1.0,)), [1.0, 2.0])
    with pytest.raises(MergeArityError):
        merge(NearestCentroid(2), [0.1, 0.2, 0.3])
    with pytest.raises(MergeArityError):
        merge(MaxLikelihoodPhase((1, 1)), [Outcome(0, {"1": 1}, 1)])
    with pytest.raises(ValueError):
        MaxLikelihoodPhase((1,), resolution=1)


def test_h2_partial_sums():
    parts = [0.32072, -0.15644, -0.36714]
    assert merge(WeightedSum((1.0, 1.0, 1.0)), parts) == pytest.approx(-0.20286, abs=1e-12)
    assert round(merge(WeightedSum((1.0, 1.0, 1.0)), parts), 5) == -0.20286


def test_single_program_identity():
    prog = Program(Circuit([x(vq(0)), measure(vq(0), "m")]), 5)
    pp = build_parallel_program(TOPO, [prog])
    res = run_parallel(pp, TOPO, seed=0)
    assert res.value is res.outcomes[0]
    assert res.value.counts == {"1": 5}


def test_ten_program_workload():
    topo = Topology.from_sizes([10, 10])
    circ = Circuit([x(vq(0)), cnot(vq(0), vq(1)), cnot(vq(1), vq(2)), cnot(vq(2), vq(3))]
                   + [measure(vq(i), f"m{i}") for i in range(4)])
    pp = build_parallel_program(topo, [Program(circ, 20) for _ in range(10)])
    with pytest.warns(Warning):
        res = run_parallel(pp, topo, seed=3)
    assert len(res.reports) == 2
    assert len(res.outcomes) == 10
    assert all(o.counts == {"1111": 20} for o in res.outcomes)
    assert res.reports[0].blocks == {0: 0, 1: 0, 2: 1, 3: 0, 4: 0}
    assert res.causality_violations() == []


@pytest.mark.filterwarnings("ignore::qdistsim.errors.CapacityWarning")
def test_round_isolation_in_trace():
    topo = Topology.from_sizes([4, 4])
    circ = Circuit([h(vq(0)), cnot(vq(0), vq(1)), cnot(vq(1), vq(2)), measure(vq(2), "m")])
    pp = build_parallel_program(topo, [Program(circ, 10) for _ in range(2)])
    res = run_parallel(pp, topo, seed=1)
    assert pp.schedule.r == 1 and pp.distributed() == (1,)
    assert res.causality_violations() == []
    qubits_by_prog = {}
    for rec in res.traces[0]:
        for q in rec.get("qubits", ()):
            qubits_by_prog.setdefault(rec["program"], set()).add(q)
    assert not qubits_by_prog[0] & qubits_by_prog[1]


def test_shared_qubits_rejected():
    s = compile_instructions(Circuit([h(A0), measure(A0, "a")]), TOPO)
    with pytest.raises(ValueError, match="shared"):
        execute([Job(0, s, 1), Job(1, s, 1)], seed=0)


@pytest.mark.filterwarnings("ignore::qdistsim.errors.CapacityWarning")
def test_parallel_equals_sequential_exact():
    topo = Topology.from_sizes([3, 3])
    progs = [
        Program(Circuit([h(vq(0)), cnot(vq(0), vq(1))]), 1, (), PauliString({vq(0): "X", vq(1): "X"}), exact=True),
        Program(Circuit([h(vq(0)), x(vq(1)), cnot(vq(0), vq(1))]), 1, (), PauliString({vq(1): "Z"}), exact=True),
    ]
    pp = build_parallel_program(topo, progs, merge=WeightedSum((0.5, 2.0)))
    par = run_parallel(pp, topo, seed=0)
    seq = run_sequential(pp, seed=0)
    assert par.value == pytest.approx(seq.value, abs=1e-12)
    assert par.value == pytest.approx(0.5, abs=1e-12)


def test_result_json():
    import json

    pp = qpe_parallel_program(2, phase_unitary(0.25), 20)
    res = run_parallel(pp, qpe_topology(2), seed=0)
    data = json.loads(res.to_json())
    assert set(data) == {"value", "per_program", "reports"}
    assert data["value"] == 0.25
