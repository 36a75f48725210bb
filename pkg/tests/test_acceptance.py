"""End-to-end acceptance criteria, one test per criterion.

Each criterion's workload lives in a cached function so that criterion 9 can
re-check every trace the others produced without running them twice.
"""

import math
from functools import cache

import numpy as np
import pytest
from scipy.stats import chi2_contingency

from oracles import circuit_unitary, deferred_distance, pauli_matrix, random_circuit, random_split
from qdistsim.algorithms import (
    HamiltonianTerm,
    PlaeConfig,
    binomial_oracle_estimate,
    phase_unitary,
    plae_programs,
    plae_queries,
    qpe_parallel_program,
    qpe_topology,
    ry_oracle,
    swap_test_program,
    vqe_programs,
)
from qdistsim.circuit import Circuit, QubitRef, cnot, custom, h, ry, vq
from qdistsim.engine import (
    WeightedSum,
    compile_instructions,
    execute,
    merge,
    run_parallel,
    run_sequential,
    trace_to_jsonl,
    validate_trace,
)
from qdistsim.metrics import qpe_sweep
from qdistsim.remapper import remap
from qdistsim.scheduler import Program, build_parallel_program
from qdistsim.topology import Topology

FIVE_SIGMA_P = 5.733e-7  # two-sided p-value of a 5 sigma deviation
TOPO3 = Topology.from_sizes([10, 10, 10])


# -- workloads


def _basis_prep(bit):
    return np.array([[0, 1], [1, 0]]) if bit else np.eye(2)


def _state_prep(psi):
    """Unitary whose first column is ``psi``."""
    a, b = psi
    return np.array([[a, -np.conj(b)], [b, np.conj(a)]])


@cache
def cnot_workload():
    """(fidelities over the 4 basis inputs, fidelities over 100 random product inputs, traces)."""
    topo = Topology.from_sizes([2, 2])
    ctl, tgt = QubitRef("QPU_0", 0), QubitRef("QPU_1", 0)
    rng = np.random.default_rng(2024)
    inputs = [(_basis_prep(i), _basis_prep(j)) for i in (0, 1) for j in (0, 1)]
    for _ in range(100):
        ps = []
        for _ in range(2):
            v = rng.normal(size=2) + 1j * rng.normal(size=2)
            ps.append(_state_prep(v / np.linalg.norm(v)))
        inputs.append(tuple(ps))
    cnot_matrix = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    fids, traces = [], []
    for k, (ua, ub) in enumerate(inputs):
        dc = remap(Circuit([custom(ctl, ua), custom(tgt, ub), cnot(ctl, tgt)]), None, topo)
        assert len(dc.blocks) == 1
        res = execute(compile_instructions(dc, topo), 1, seed=k, topology=topo, capture_state=True)
        out = res.final_states[0].reduced([ctl, tgt])
        expected = cnot_matrix @ np.kron(ua[:, 0], ub[:, 0])
        fids.append(abs(np.vdot(expected, out)) ** 2)
        traces.append(res.trace)
    return fids[:4], fids[4:], traces


@cache
def qpe_run(seed=7):
    pp = qpe_parallel_program(3, phase_unitary(1 / 3), 1000)
    return run_parallel(pp, qpe_topology(3), seed=seed)


def random_hamiltonian(rng):
    terms = [HamiltonianTerm(float(rng.normal()), "".join(rng.choice(list("IXYZ"), 2)))
             for _ in range(int(rng.integers(1, 7)))]
    ansatz = Circuit([ry(vq(0), rng.uniform(0, 2 * np.pi)), ry(vq(1), rng.uniform(0, 2 * np.pi)),
                      cnot(vq(0), vq(1)), ry(vq(0), rng.uniform(0, 2 * np.pi))], [vq(0), vq(1)])
    return terms, ansatz


def dense_energy(terms, ansatz):
    psi = circuit_unitary(ansatz, [vq(0), vq(1)])[:, 0]
    ham = sum(t.coeff * pauli_matrix(t.pauli) for t in terms)
    return float(np.real(np.vdot(psi, ham @ psi)))


@cache
def vqe_workloads():
    rng = np.random.default_rng(6)
    return [random_hamiltonian(rng) for _ in range(12)]


@cache
def vqe_exact_runs():
    """(merged, dense, parallel result, program) for each workload in exact mode."""
    rows = []
    for terms, ansatz in vqe_workloads():
        pp = vqe_programs(terms, ansatz, TOPO3, exact=True)
        res = run_parallel(pp, TOPO3, seed=0)
        rows.append((res.value, dense_energy(terms, ansatz), res, pp))
    return rows


FIFTEEN = ["II", "IX", "IY", "IZ", "XI", "XX", "XY", "XZ", "YI", "YX", "YY", "YZ", "ZI", "ZX", "ZY"]


@cache
def fifteen_term_run():
    terms = [HamiltonianTerm(0.1 * (i + 1), p) for i, p in enumerate(FIFTEEN)]
    ansatz = Circuit([h(vq(0)), cnot(vq(0), vq(1))])
    pp = vqe_programs(terms, ansatz, TOPO3, exact=True)
    return pp, run_parallel(pp, TOPO3, seed=0)


@cache
def plae_run():
    cfg = PlaeConfig(1.0, 8, 4096)
    queries = plae_queries(cfg)
    oracle_estimate = binomial_oracle_estimate(0.25, queries, cfg.shots, np.random.default_rng(77))
    oracle, grover = ry_oracle(0.25)
    res = run_parallel(plae_programs(oracle, grover, cfg, TOPO3), TOPO3, seed=77)
    return oracle_estimate, res


SWAP_PAIRS = [
    ((1.0, 0.0), (1.0, 0.0), 1.0),
    ((1.0, 0.0), (0.0, 1.0), 0.5),
    ((1.0, 0.0), (1 / math.sqrt(2), 1 / math.sqrt(2)), 0.75),
]


@cache
def swap_runs():
    rows = []
    for k, (a, b, p0) in enumerate(SWAP_PAIRS):
        sampled = run_parallel(build_parallel_program(TOPO3, [swap_test_program(a, b, 10_000)]), TOPO3, seed=80 + k)
        exact = run_parallel(build_parallel_program(TOPO3, [swap_test_program(a, b, exact=True)]), TOPO3, seed=0)
        rows.append((p0, sampled, exact))
    return rows


# -- criteria


def test_criterion_1_scheduler_golden(criterion):
    with criterion(1, "scheduler golden test, ten width-4 programs", budget=1) as c:
        topo = Topology.from_sizes([10, 10])
        chain = Circuit([h(vq(0))] + [cnot(vq(i), vq(i + 1)) for i in range(3)])
        pp = build_parallel_program(topo, [Program(chain) for _ in range(10)])
        assert pp.schedule.one_based() == [[[1, 2, 3], [3, 4, 5]], [[6, 7, 8], [8, 9, 10]]]
        assert [j + 1 for j in pp.distributed()] == [3, 8]
        c.detail = "S(0), S(1) exact; dP3, dP8 distributed"


def test_criterion_2_cat_entangler(criterion):
    with criterion(2, "non-local CNOT equals local CNOT", budget=5) as c:
        basis, product, _ = cnot_workload()
        assert all(abs(f - 1) < 1e-12 for f in basis)
        assert min(product) >= 1 - 1e-9
        c.detail = f"basis inputs exact; min fidelity over 100 product states {min(product):.15f}"


def test_criterion_3_distributed_equals_monolithic(criterion):
    with criterion(3, "distributed equals monolithic, 200 random circuits", budget=120) as c:
        rng = np.random.default_rng(3)
        worst, blocks = 0.0, 0
        for _ in range(200):
            width = int(rng.integers(2, 9))
            circ = random_circuit(rng, width, int(rng.integers(1, 41)))
            alloc, topo = random_split(rng, width)
            d, dc = deferred_distance(circ, alloc, topo)
            worst, blocks = max(worst, d), blocks + len(dc.blocks)
        assert worst < 1e-9
        c.detail = f"max distance {worst:.2e} over {blocks} cat blocks"


def test_criterion_4_qpe_demo(criterion):
    with criterion(4, "distributed QPE estimates 0.375", budget=30) as c:
        res = qpe_run()
        counts = res.outcomes[0].counts
        modal = max(sorted(counts), key=counts.get)
        assert res.value == 0.375
        assert counts[modal] / 1000 > 0.5
        c.detail = f"modal {modal} at {counts[modal]}/1000"


def test_criterion_5_fig5_series(criterion):
    with criterion(5, "QPE operation counts n=1..11", budget=60) as c:
        mono = [7, 14, 24, 39, 63, 104, 178, 317, 585, 1110, 2148]
        rows = qpe_sweep(range(1, 12))
        assert [m for _, m, _ in rows] == mono
        assert [d for _, _, d in rows] == [m + 12 * n for n, m in zip(range(1, 12), mono)]
        c.detail = "monolithic and distributed series exact"


def test_criterion_6_vqe_merge(criterion):
    with criterion(6, "VQE parallel merge", budget=30) as c:
        worst = max(abs(merged - dense) for merged, dense, _, _ in vqe_exact_runs())
        assert worst < 1e-9
        pp, _ = fifteen_term_run()
        assert pp.schedule.r == 1
        assert [len(s) for s in pp.schedule[0]] == [5, 5, 5]
        assert merge(WeightedSum((1.0, 1.0, 1.0)), [0.32072, -0.15644, -0.36714]) == pytest.approx(-0.20286, abs=1e-15)
        c.detail = f"max |merged - dense| {worst:.2e}; 15 terms as 5/5/5 in one round"


def test_criterion_7_plae(criterion):
    with criterion(7, "PLAE query schedules and amplitude estimate", budget=60) as c:
        cases = {(1, 5): [1] * 5, (1 / 3, 4): [1, 2, 3, 4], (1 / 2, 9): [1, 1, 1, 2, 2, 2, 2, 2, 3]}
        for (beta, K), expected in cases.items():
            assert plae_queries(PlaeConfig(beta, K)) == expected
            e = (1 - beta) / (2 * beta)
            assert expected == [math.floor(round(k**e, 9)) for k in range(1, K + 1)]
        oracle_estimate, res = plae_run()
        assert abs(res.value - oracle_estimate) <= 0.02
        c.detail = f"estimate {res.value} vs binomial oracle {oracle_estimate}"


def test_criterion_8_swap_test(criterion):
    with criterion(8, "swap test P(0)", budget=30) as c:
        worst_sigma = 0.0
        for p0, sampled, exact in swap_runs():
            n = 10_000
            zeros = sampled.value.counts.get("0", 0)
            sigma = math.sqrt(max(p0 * (1 - p0), 1 / n) / n)
            worst_sigma = max(worst_sigma, abs(zeros / n - p0) / sigma)
            assert abs(zeros / n - p0) <= 5 * sigma
            assert abs((1 + exact.value.expectation) / 2 - p0) < 1e-9
        c.detail = f"worst deviation {worst_sigma:.2f} sigma; exact mode within 1e-9"


def all_traces():
    traces = list(cnot_workload()[2])
    traces += qpe_run().traces
    for _, _, res, _ in vqe_exact_runs():
        traces += res.traces
    traces += fifteen_term_run()[1].traces
    traces += plae_run()[1].traces
    for _, sampled, exact in swap_runs():
        traces += sampled.traces + exact.traces
    return traces


def test_criterion_9_determinism_and_causality(criterion):
    with criterion(9, "determinism and causality", budget=60) as c:
        pp = qpe_parallel_program(3, phase_unitary(1 / 3), 1000)
        topo = qpe_topology(3)
        runs = [run_parallel(pp, topo, seed=7, trace_shots=None) for _ in range(10)]
        blobs = {"".join(trace_to_jsonl(t) for t in res.traces) for res in runs}
        assert len(blobs) == 1
        traces = all_traces()
        violations = [v for t in traces for v in validate_trace(t)]
        assert violations == []
        c.detail = f"10 identical full traces; {len(traces)} traces, 0 violations"


def test_criterion_10_parallel_equals_sequential(criterion):
    with criterion(10, "parallel equals sequential", budget=120) as c:
        worst = 0.0
        for merged, _, _, pp in vqe_exact_runs():
            worst = max(worst, abs(merged - run_sequential(pp, seed=0).value))
        assert worst < 1e-12
        min_p, tested = 1.0, 0
        for k, (terms, ansatz) in enumerate(vqe_workloads()):
            pp = vqe_programs(terms, ansatz, TOPO3, shots=10_000)
            par = run_parallel(pp, TOPO3, seed=1000 + k, trace_shots=0)
            seq = run_sequential(pp, seed=2000 + k, trace_shots=0)
            for a, b in zip(par.outcomes, seq.outcomes):
                keys = sorted(set(a.counts) | set(b.counts))
                if len(keys) < 2:
                    assert a.counts == b.counts
                    continue
                table = [[a.counts.get(s, 0) for s in keys], [b.counts.get(s, 0) for s in keys]]
                p = chi2_contingency(table)[1]
                min_p, tested = min(min_p, p), tested + 1
                assert p > FIVE_SIGMA_P
        c.detail = f"exact max diff {worst:.1e}; {tested} chi-square tests, min p {min_p:.3g}"
