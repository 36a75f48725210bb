"""Quantum phase estimation with the measurement register on one QPU and the phase qubit on another."""

from __future__ import annotations

import numpy as np

from ..circuit import Circuit, QubitRef, cphase, controlled, h, is_unitary, measure, vq, x
from ..engine.merge import BitAssembly
from ..scheduler import Allocation, ParallelProgram, Program, Schedule
from ..topology import Topology


def qpe_circuit(n: int, u) -> Circuit:
    """QPE with ``n`` measurement qubits for a single-qubit unitary ``u`` with eigenvector |1>.

    Qubits ``vq(0) .. vq(n-1)`` form the measurement register (bit ``q{i}``
    for ``vq(i)``); ``vq(n)`` is the phase qubit, flipped to |1> by an X.
    Measurement qubit i controls ``2**i`` repeated applications of ``u``; the
    inverse QFT runs over the register in reverse without swaps, so ``q0``
    ends up as the most significant bit of the phase.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise ValueError("U must be a 2x2 unitary (non-unitary matrix given)")
    phase_qubit = vq(n)
    meas = [vq(i) for i in range(n)]
    gates = [x(phase_qubit)]
    gates += [h(q) for q in meas]
    for i, q in enumerate(meas):
        gates += [controlled(q, phase_qubit, u) for _ in range(2**i)]
    rev = meas[::-1]
    for i, q in enumerate(rev):
        for j, q2 in enumerate(rev[:i]):
            gates.append(cphase(q2, q, -np.pi * 2**j / 2**i))
        gates.append(h(q))
    gates += [measure(q, f"q{q.index}") for q in rev]
    return Circuit(gates, meas + [phase_qubit])


def qpe_merge(n: int) -> BitAssembly:
    return BitAssembly(tuple(f"q{i}" for i in range(n)))


def qpe_topology(n: int) -> Topology:
    """Two QPUs sized so every cat block finds a free ancilla.

    QPU_0 holds the phase qubit, QPU_1 the register; the blocks of all n
    register qubits stay open until the inverse QFT, so each side needs n
    spare slots.
    """
    return Topology.from_sizes([n + 1, 2 * n])


def qpe_allocation(n: int) -> Allocation:
    """Phase qubit on QPU_0 slot 0, measurement qubit i on QPU_1 slot i."""
    mapping = {vq(i): QubitRef("QPU_1", i) for i in range(n)}
    mapping[vq(n)] = QubitRef("QPU_0", 0)
    return Allocation(mapping)


def qpe_program(n: int, u, shots: int = 1000) -> Program:
    return Program(qpe_circuit(n, u), shots, tuple(f"q{i}" for i in range(n)), name=f"qpe{n}")


def qpe_parallel_program(n: int, u, shots: int = 1000, topology: Topology | None = None) -> ParallelProgram:
    """The single QPE program split across two QPUs, merged by bit assembly."""
    topology = topology or qpe_topology(n)
    prog = qpe_program(n, u, shots)
    alloc = qpe_allocation(n)
    sets = tuple(frozenset({0}) if node in alloc.nodes else frozenset() for node in topology.node_ids)
    return ParallelProgram((prog,), Schedule((sets,), topology.node_ids), qpe_merge(n), (alloc,))


def phase_unitary(theta: float) -> np.ndarray:
    """diag(1, e^{2 pi i theta}): eigenvector |1> with phase ``theta``."""
    return np.diag([1.0, np.exp(2j * np.pi * theta)])
