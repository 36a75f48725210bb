"""Simulate parallel and distributed quantum programs on a cluster of small QPUs."""

from .backend import PauliString, StateVector, exact_expectation, run_circuit
from .circuit import Circuit, Gate, GateKind, QubitRef, layer_decompose, validate, vq
from .engine import (
    BitAssembly,
    Identity,
    MaxLikelihoodPhase,
    NearestCentroid,
    WeightedSum,
    compile_instructions,
    execute,
    merge,
    run_parallel,
    run_sequential,
    validate_trace,
)
from .errors import CapacityWarning, QdsError
from .metrics import AccountingProfile, ResourceReport, count_distributed, count_monolithic
from .remapper import DistributedCircuit, group_blocks, remap
from .scheduler import Allocation, ParallelProgram, Program, allocate_greedy, allocate_random, build_parallel_program
from .topology import QpuSpec, Topology

__version__ = "0.1.0"

__all__ = [
    "AccountingProfile", "Allocation", "BitAssembly", "CapacityWarning", "Circuit", "DistributedCircuit",
    "Gate", "GateKind", "Identity", "MaxLikelihoodPhase", "NearestCentroid", "ParallelProgram",
    "PauliString", "Program", "QdsError", "QpuSpec", "QubitRef", "ResourceReport", "StateVector",
    "Topology", "WeightedSum", "allocate_greedy", "allocate_random", "build_parallel_program",
    "compile_instructions", "count_distributed", "count_monolithic", "exact_expectation", "execute",
    "group_blocks", "layer_decompose", "merge", "remap", "run_circuit", "run_parallel", "run_sequential",
    "validate", "validate_trace", "vq",
]
