"""The controller: remap, compile and run a parallel program round by round, then merge."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..backend import make_rng
from ..circuit import QubitRef
from ..errors import QdsError
from ..remapper import DistributedCircuit, remap
from ..scheduler import Allocation, ParallelProgram, Program
from ..topology import Topology
from .instructions import compile_instructions
from .merge import Identity, merge
from .runtime import Job, Outcome, Simulation, validate_trace


@dataclass
class RoundReport:
    round: int
    programs: list[int]
    horizon: int
    blocks: dict[int, int]
    overflow: list[str]
    trace: list[dict] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "programs": [j + 1 for j in self.programs],
            "horizon": self.horizon,
            "blocks": {str(j + 1): b for j, b in self.blocks.items()},
            "overflow": self.overflow,
        }


@dataclass
class ParallelResult:
    value: Any
    outcomes: list[Outcome]
    reports: list[RoundReport]
    distributed: dict[int, DistributedCircuit] = field(default_factory=dict, repr=False)
    final_states: dict[int, Any] = field(default_factory=dict, repr=False)

    @property
    def traces(self) -> list[list[dict]]:
        return [r.trace for r in self.reports]

    def causality_violations(self) -> list[str]:
        return [v for t in self.traces for v in validate_trace(t)]

    def to_json(self) -> str:
        value = self.value
        if isinstance(value, Outcome):
            value = value.to_dict()
        elif isinstance(value, list) and value and isinstance(value[0], Outcome):
            value = [o.to_dict() for o in value]
        return json.dumps({
            "value": value,
            "per_program": [o.to_dict() for o in self.outcomes],
            "reports": [r.to_dict() for r in self.reports],
        })


def _job(j: int, prog: Program, alloc: Allocation, dc: DistributedCircuit, topology, latency) -> Job:
    sched = compile_instructions(dc, topology, outputs=prog.outputs, latency=latency)
    obs = prog.observable.remap(alloc.__getitem__) if prog.observable is not None else None
    return Job(j, sched, prog.repetitions, obs, prog.exact)


def _with_context(err: QdsError, where: str) -> QdsError:
    err.args = (f"{where}: {err}",) + err.args[1:]
    return err


def run_parallel(
    pp: ParallelProgram,
    topology: Topology,
    seed: int | np.random.Generator,
    *,
    latency: int = 1,
    strict: bool = False,
    trace_shots: int | None = 1,
    capture_state: bool = False,
) -> ParallelResult:
    """Execute every round of ``pp`` on ``topology`` and merge the outputs.

    Within a round each program is remapped with ancillas drawn from slots no
    other program of the round holds, compiled, and all of them run on one
    shared clock. One RNG stream feeds every round in turn.
    """
    rng = make_rng(seed)
    outcomes: dict[int, Outcome] = {}
    reports: list[RoundReport] = []
    dcs: dict[int, DistributedCircuit] = {}
    states: dict[int, Any] = {}
    for i in range(pp.schedule.r):
        members = pp.schedule.programs_in_round(i)
        occupied: set[QubitRef] = {q for j in members for q in pp.allocations[j].slots}
        jobs = []
        for j in members:
            prog, alloc = pp.programs[j], pp.allocations[j]
            try:
                dc = remap(prog.circuit, alloc, topology, occupied=occupied, strict=strict)
                occupied.update(dc.ancillas)
                jobs.append(_job(j, prog, alloc, dc, topology, latency))
            except QdsError as e:
                raise _with_context(e, f"round {i} program {j + 1}")
            dcs[j] = dc
        try:
            sim = Simulation(jobs, topology, strict=strict, trace_shots=trace_shots, capture_state=capture_state)
            res = sim.run(rng)
        except QdsError as e:
            raise _with_context(e, f"round {i}")
        for o in res.outcomes:
            outcomes[o.program] = o
        states.update(res.final_states)
        reports.append(RoundReport(
            i, members, sim.horizon, {j: len(dcs[j].blocks) for j in members},
            sorted({str(q) for j in members for q in dcs[j].overflow}), res.trace,
        ))
    ordered = [outcomes[j] for j in range(pp.n)]
    spec = pp.merge if pp.merge is not None else Identity()
    return ParallelResult(merge(spec, ordered), ordered, reports, dcs, states)


def run_sequential(
    pp: ParallelProgram,
    seed: int | np.random.Generator,
    *,
    trace_shots: int | None = 1,
) -> ParallelResult:
    """Reference execution: each program alone on one QPU large enough to hold it."""
    rng = make_rng(seed)
    outcomes: list[Outcome] = []
    reports: list[RoundReport] = []
    for j, prog in enumerate(pp.programs):
        topo = Topology.from_sizes([prog.width])
        alloc = Allocation.from_slots([QubitRef(topo.node_ids[0], k) for k in range(prog.width)], prog.qubit_order)
        dc = remap(prog.circuit, alloc, topo)
        sim = Simulation([_job(j, prog, alloc, dc, topo, 1)], topo, trace_shots=trace_shots)
        res = sim.run(rng)
        outcomes.append(res.outcomes[0])
        reports.append(RoundReport(j, [j], sim.horizon, {j: 0}, [], res.trace))
    spec = pp.merge if pp.merge is not None else Identity()
    return ParallelResult(merge(spec, outcomes), outcomes, reports)
