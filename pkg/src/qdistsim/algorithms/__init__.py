"""Builders expressing QPE, VQE, PLAE and swap-test k-means as parallel programs."""

from .kmeans import kmeans, kmeans_round, load_vectors_csv, p_zero, swap_test_circuit, swap_test_program
from .plae import PlaeConfig, binomial_oracle_estimate, plae_programs, plae_queries, ry_oracle
from .qpe import (
    phase_unitary,
    qpe_allocation,
    qpe_circuit,
    qpe_merge,
    qpe_parallel_program,
    qpe_program,
    qpe_topology,
)
from .stateprep import amplitude_encoding, normalize
from .vqe import HamiltonianTerm, load_terms, minimize_energy, term_program, vqe_programs

__all__ = [
    "HamiltonianTerm", "PlaeConfig", "amplitude_encoding", "binomial_oracle_estimate", "kmeans",
    "kmeans_round", "load_terms", "load_vectors_csv", "minimize_energy", "normalize", "p_zero",
    "phase_unitary", "plae_programs", "plae_queries", "qpe_allocation", "qpe_circuit", "qpe_merge",
    "qpe_parallel_program", "qpe_program", "qpe_topology", "ry_oracle", "swap_test_circuit",
    "swap_test_program", "term_program", "vqe_programs",
]
