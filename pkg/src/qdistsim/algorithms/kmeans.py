"""Swap-test distance estimation and a k-means loop built on it."""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Sequence

import numpy as np

from ..backend import PauliString
from ..circuit import Circuit, Gate, QubitRef, cnot, h, measure, phase, t, vq
from ..engine.controller import run_parallel
from ..engine.merge import NearestCentroid
from ..scheduler import Allocator, ParallelProgram, Program, allocate_greedy, build_parallel_program
from ..topology import Topology
from .stateprep import amplitude_encoding, normalize, num_qubits

ANCILLA_BIT = "anc"


def toffoli(c1: QubitRef, c2: QubitRef, target: QubitRef) -> list[Gate]:
    """Standard decomposition into H, T, T^dagger and six CNOTs."""
    tdg = lambda q: phase(q, -np.pi / 4)  # noqa: E731
    return [
        h(target),
        cnot(c2, target), tdg(target),
        cnot(c1, target), t(target),
        cnot(c2, target), tdg(target),
        cnot(c1, target), t(c2), t(target), h(target),
        cnot(c1, c2), t(c1), tdg(c2),
        cnot(c1, c2),
    ]


def cswap(control: QubitRef, a: QubitRef, b: QubitRef) -> list[Gate]:
    return [cnot(b, a), *toffoli(control, a, b), cnot(b, a)]


def swap_test_circuit(a: Sequence[float], b: Sequence[float]) -> Circuit:
    """Ancilla ``vq(0)`` then registers for ``a`` and ``b``; measures the ancilla into bit ``anc``.

    P(anc = 0) = (1 + |<a|b>|^2) / 2 for the normalized vectors.
    """
    va, vb = normalize(a), normalize(b)
    if va.size != vb.size:
        raise ValueError(f"dimension mismatch: {va.size} vs {vb.size}")
    q = num_qubits(va.size)
    anc = vq(0)
    reg_a = [vq(1 + i) for i in range(q)]
    reg_b = [vq(1 + q + i) for i in range(q)]
    gates = amplitude_encoding(va, reg_a) + amplitude_encoding(vb, reg_b)
    gates.append(h(anc))
    for qa, qb in zip(reg_a, reg_b):
        gates += cswap(anc, qa, qb)
    gates += [h(anc), measure(anc, ANCILLA_BIT)]
    return Circuit(gates, [anc] + reg_a + reg_b)


def swap_test_program(a: Sequence[float], b: Sequence[float], shots: int = 1000, exact: bool = False) -> Program:
    """The outcome's expectation estimates the overlap |<a|b>|^2, which equals <Z> on the ancilla."""
    circ = swap_test_circuit(a, b)
    obs = PauliString({vq(0): "Z"})
    if exact:
        return Program(Circuit(circ.gates[:-1], circ.qubits), 1, (), obs, exact=True)
    return Program(circ, shots, (ANCILLA_BIT,), obs)


def p_zero(overlap_estimate: float) -> float:
    """P(ancilla = 0) implied by an overlap estimate."""
    return (1 + overlap_estimate) / 2


def kmeans_round(
    points: Sequence[Sequence[float]],
    centroids: Sequence[Sequence[float]],
    topology: Topology,
    *,
    shots: int = 1000,
    exact: bool = False,
    allocator: Allocator = allocate_greedy,
) -> ParallelProgram:
    """n*k swap tests, program i*k + j comparing point i with centroid j."""
    if not points or not centroids:
        raise ValueError("need at least one point and one centroid")
    dims = {normalize(v).size for v in list(points) + list(centroids)}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch among vectors: {sorted(dims)}")
    programs = [swap_test_program(p, c, shots, exact) for p in points for c in centroids]
    return build_parallel_program(topology, programs, allocator, NearestCentroid(len(centroids)))


def kmeans(
    points: Sequence[Sequence[float]],
    k: int,
    topology: Topology,
    *,
    iterations: int = 5,
    shots: int = 1000,
    exact: bool = False,
    seed: int = 0,
) -> tuple[list[int], np.ndarray]:
    """Alternate quantum assignment rounds with classical centroid updates.

    Centroids start at the first k points. An update averages the normalized
    members of each cluster and renormalizes; an empty cluster keeps its
    centroid. Stops early when the assignment no longer changes.
    """
    pts = np.array([normalize(p) for p in points])
    if not 1 <= k <= len(pts):
        raise ValueError("k must be between 1 and the number of points")
    cents = pts[:k].copy()
    rng = np.random.Generator(np.random.Philox(seed))
    assign: list[int] = []
    for _ in range(iterations):
        pp = kmeans_round(list(pts), list(cents), topology, shots=shots, exact=exact)
        new = run_parallel(pp, topology, rng, trace_shots=0).value
        for j in range(k):
            members = pts[[i for i, a in enumerate(new) if a == j]]
            if len(members):
                mean = members.mean(axis=0)
                if np.linalg.norm(mean) > 0:
                    cents[j] = mean / np.linalg.norm(mean)
        if new == assign:
            break
        assign = new
    return assign, cents


def load_vectors_csv(path: str | Path) -> list[list[float]]:
    with open(path, newline="") as fh:
        return [[float(x) for x in row] for row in csv.reader(fh) if row and not row[0].startswith("#")]
