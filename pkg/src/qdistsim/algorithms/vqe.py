"""Expectation of a Pauli-sum Hamiltonian, one program per term."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..backend import PauliString
from ..circuit import Circuit, Gate, QubitRef, h, measure, phase, vq
from ..engine.merge import WeightedSum
from ..scheduler import Allocator, ParallelProgram, Program, allocate_greedy, build_parallel_program
from ..topology import Topology


@dataclass(frozen=True)
class HamiltonianTerm:
    """``coeff`` times the Pauli string ``pauli``; character i acts on ``vq(i)``."""

    coeff: float
    pauli: str

    def __post_init__(self) -> None:
        if not math.isfinite(self.coeff):
            raise ValueError("coefficient must be finite")
        label = self.pauli.upper()
        if not label or set(label) - set("IXYZ"):
            raise ValueError(f"bad Pauli label {self.pauli!r}")
        object.__setattr__(self, "coeff", float(self.coeff))
        object.__setattr__(self, "pauli", label)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.pauli) if p != "I")

    def pauli_string(self) -> PauliString:
        return PauliString.from_label(self.pauli, [vq(i) for i in range(len(self.pauli))])


def load_terms(path: str | Path) -> list[HamiltonianTerm]:
    data = json.loads(Path(path).read_text())
    return [HamiltonianTerm(float(t["coeff"]), str(t["pauli"])) for t in data]


def basis_rotation(label: str, qubits: Sequence[QubitRef]) -> list[Gate]:
    """Gates taking each X or Y factor's eigenbasis to the computational basis."""
    gates: list[Gate] = []
    for p, q in zip(label, qubits):
        if p == "X":
            gates.append(h(q))
        elif p == "Y":
            gates += [phase(q, -np.pi / 2), h(q)]
    return gates


def term_program(term: HamiltonianTerm, ansatz: Circuit, shots: int = 1000, exact: bool = False) -> Program:
    """Ansatz, then basis rotations and measurement of the term's support.

    In exact mode the circuit stops after the ansatz and the expectation is
    read from the final state.
    """
    width = max((q.index + 1 for q in ansatz.qubits), default=0)
    if any(i >= width for i in term.support):
        raise ValueError(f"width mismatch: term {term.pauli} acts beyond the {width}-qubit ansatz")
    qubits = [vq(i) for i in range(width)]
    obs = term.pauli_string()
    if exact:
        return Program(Circuit(ansatz.gates, qubits), 1, (), obs, exact=True, name=term.pauli)
    gates = list(ansatz.gates) + basis_rotation(term.pauli, qubits)
    bits = tuple(f"m{i}" for i in term.support)
    gates += [measure(vq(i), b) for i, b in zip(term.support, bits)]
    return Program(Circuit(gates, qubits), shots, bits, obs, name=term.pauli)


def vqe_programs(
    terms: Sequence[HamiltonianTerm],
    ansatz: Circuit,
    topology: Topology,
    *,
    shots: int = 1000,
    exact: bool = False,
    allocator: Allocator = allocate_greedy,
) -> ParallelProgram:
    """One program per term, merged as the coefficient-weighted sum of expectations."""
    if not terms:
        raise ValueError("need at least one term")
    programs = [term_program(t, ansatz, shots, exact) for t in terms]
    return build_parallel_program(topology, programs, allocator, WeightedSum(tuple(t.coeff for t in terms)))


def minimize_energy(
    energy: Callable[[np.ndarray], float],
    x0: Sequence[float],
    *,
    step: float = 0.5,
    tol: float = 1e-4,
    max_evals: int = 2000,
) -> tuple[np.ndarray, float]:
    """Derivative-free compass search over ansatz parameters.

    Tries +/- ``step`` along each coordinate, keeps any improvement and halves
    the step when none is found.
    """
    x = np.asarray(x0, dtype=float).copy()
    best = energy(x)
    evals = 1
    while step > tol and evals < max_evals:
        improved = False
        for i in range(x.size):
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[i] += sign * step
                val = energy(trial)
                evals += 1
                if val < best:
                    x, best, improved = trial, val, True
                    break
        if not improved:
            step /= 2
    return x, best
