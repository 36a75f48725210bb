"""Instruction compilation, lock-step execution and merging."""

from .controller import ParallelResult, RoundReport, run_parallel, run_sequential
from .instructions import (
    Instruction,
    InstrKind,
    InstructionSchedule,
    OutputBit,
    compile_instructions,
    validate_schedule,
)
from .merge import (
    BitAssembly,
    Identity,
    MaxLikelihoodPhase,
    MergeSpec,
    NearestCentroid,
    WeightedSum,
    assemble_bits,
    max_likelihood_amplitude,
    merge,
    nearest_centroid,
    overlap_to_distance,
    success_probability,
)
from .runtime import (
    ClassicalChannel,
    Clock,
    ComputingNode,
    ExecutionResult,
    Job,
    Outcome,
    Simulation,
    execute,
    parity_expectation,
    trace_to_jsonl,
    validate_trace,
)

__all__ = [
    "BitAssembly", "ClassicalChannel", "Clock", "ComputingNode", "ExecutionResult", "Identity",
    "InstrKind", "Instruction", "InstructionSchedule", "Job", "MaxLikelihoodPhase", "MergeSpec",
    "NearestCentroid", "Outcome", "OutputBit", "ParallelResult", "RoundReport", "Simulation",
    "WeightedSum", "assemble_bits", "compile_instructions", "execute", "max_likelihood_amplitude",
    "merge", "nearest_centroid", "overlap_to_distance", "parity_expectation", "run_parallel",
    "run_sequential", "success_probability", "trace_to_jsonl", "validate_schedule", "validate_trace",
]
