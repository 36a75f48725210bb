"""Power-law amplitude estimation: programs with m_k Grover queries and a likelihood merge."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..circuit import Circuit, QubitRef, measure, ry, vq, z
from ..engine.merge import MaxLikelihoodPhase
from ..scheduler import Allocator, ParallelProgram, Program, allocate_greedy, build_parallel_program
from ..topology import Topology

GOOD_BIT = "good"


@dataclass(frozen=True)
class PlaeConfig:
    beta: float
    K: int
    shots: int = 100

    def __post_init__(self) -> None:
        if not 0 < self.beta <= 1:
            raise ValueError("beta must lie in (0, 1]")
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")


def plae_queries(cfg: PlaeConfig) -> list[int]:
    """``floor(k ** ((1 - beta) / (2 beta)))`` for k = 1..K, duplicates kept."""
    e = (1 - cfg.beta) / (2 * cfg.beta)
    # the small slack keeps exact integer powers from rounding down
    return [math.floor(k**e + 1e-9) for k in range(1, cfg.K + 1)]


def ry_oracle(a: float, qubit: QubitRef | None = None) -> tuple[Circuit, Circuit]:
    """A = RY(2 asin sqrt(a)) on one qubit and its Grover iterate Q.

    Q is written as Z, A^dagger, Z, A, which equals RY(4 asin sqrt(a)) up to a
    global sign, so m applications after A give P(1) = sin^2((2m+1) asin sqrt(a)).
    """
    if not 0 <= a <= 1:
        raise ValueError("amplitude must lie in [0, 1]")
    q = qubit or vq(0)
    theta = math.asin(math.sqrt(a))
    oracle = Circuit([ry(q, 2 * theta)])
    grover = Circuit([z(q), ry(q, -2 * theta), z(q), ry(q, 2 * theta)])
    return oracle, grover


def plae_program(oracle: Circuit, grover: Circuit, m: int, shots: int, target: QubitRef) -> Program:
    gates = list(oracle.gates)
    for _ in range(m):
        gates += grover.gates
    gates.append(measure(target, GOOD_BIT))
    qubits = sorted(set(oracle.qubits) | set(grover.qubits))
    return Program(Circuit(gates, qubits), shots, (GOOD_BIT,), name=f"m={m}")


def plae_programs(
    oracle: Circuit,
    grover: Circuit,
    cfg: PlaeConfig,
    topology: Topology,
    *,
    target: QubitRef | None = None,
    copies: int = 1,
    resolution: int = 10_000,
    allocator: Allocator = allocate_greedy,
) -> ParallelProgram:
    """Program k runs A then m_k applications of Q and measures ``target``.

    With ``copies > 1`` each program is duplicated and its shots divided among
    the copies (the first copies take the remainder); since the merge sums
    binomial log-likelihoods, pooled counts give the same estimate.
    """
    if set(grover.qubits) - set(oracle.qubits) or set(oracle.qubits) - set(grover.qubits):
        raise ValueError("width mismatch: A and Q act on different qubits")
    target = target or min(oracle.qubits)
    if copies < 1 or copies > cfg.shots:
        raise ValueError("copies must be between 1 and the shot count")
    queries = plae_queries(cfg)
    programs: list[Program] = []
    merged_queries: list[int] = []
    for m in queries:
        base, extra = divmod(cfg.shots, copies)
        for c in range(copies):
            programs.append(plae_program(oracle, grover, m, base + (c < extra), target))
            merged_queries.append(m)
    return build_parallel_program(topology, programs, allocator, MaxLikelihoodPhase(tuple(merged_queries), resolution))


def binomial_oracle_estimate(a: float, queries: Sequence[int], shots: int, rng: np.random.Generator,
                             resolution: int = 10_000) -> float:
    """Classical stand-in: sample hit counts from the binomial model and maximize the likelihood."""
    from ..engine.merge import max_likelihood_amplitude, success_probability

    hits = [int(rng.binomial(shots, float(success_probability(a, m)))) for m in queries]
    return max_likelihood_amplitude(queries, hits, [shots] * len(queries), resolution)
