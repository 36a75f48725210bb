"""Operation counts for monolithic circuits and distributed executions.

Monolithic accounting charges one operation per qubit preparation, gate and
measurement. Distributed accounting adds the cat-block protocol, itemized by
role and weighted by an :class:`AccountingProfile`. The default profile
charges twelve operations per block.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .circuit import CONDITIONAL, CONTROLLED, SINGLE_QUBIT_UNITARY, Circuit, GateKind, layer_decompose
from .errors import CapacityWarning
from .remapper import DistributedCircuit

PROTOCOL_ROLES = (
    "epr_gen", "epr_transmit", "ent_cnot", "ent_measure", "ent_send", "ent_recv", "ent_correction",
    "dis_h", "dis_measure", "dis_send", "dis_recv", "dis_correction", "reset_local", "reset_remote",
)
DATA_CATEGORIES = ("prep", "gate", "measure", "correction", "reset")

_DEFAULT_WEIGHTS = {**{r: 1 for r in PROTOCOL_ROLES + DATA_CATEGORIES}, "ent_correction": 0, "reset_local": 0}

# each circuit-level block role and the protocol roles it stands for
_ROLE_EXPANSION = {
    "epr": ("epr_gen", "epr_transmit"),
    "ent_cnot": ("ent_cnot",),
    "ent_measure": ("ent_measure", "ent_send", "ent_recv"),
    "ent_correction": ("ent_correction",),
    "dis_h": ("dis_h",),
    "dis_measure": ("dis_measure", "dis_send", "dis_recv"),
    "dis_correction": ("dis_correction",),
    "reset_local": ("reset_local",),
    "reset_remote": ("reset_remote",),
}


@dataclass(frozen=True)
class AccountingProfile:
    """Per-category operation weights. Unlisted categories weigh 1."""

    weights: Mapping[str, int] = field(default_factory=lambda: dict(_DEFAULT_WEIGHTS))

    def __post_init__(self) -> None:
        merged = dict(_DEFAULT_WEIGHTS)
        for k, v in dict(self.weights).items():
            if k not in merged:
                raise ValueError(f"unknown accounting category {k!r}")
            if int(v) != v or v < 0:
                raise ValueError(f"weight for {k!r} must be a nonnegative integer")
            merged[k] = int(v)
        object.__setattr__(self, "weights", merged)

    def __getitem__(self, key: str) -> int:
        return self.weights[key]

    @property
    def block_overhead(self) -> int:
        return sum(self.weights[r] for r in PROTOCOL_ROLES)

    @classmethod
    def load(cls, path: str | Path) -> "AccountingProfile":
        return cls(json.loads(Path(path).read_text()))


DEFAULT_PROFILE = AccountingProfile()


@dataclass(frozen=True)
class ResourceReport:
    prep_count: int = 0
    gate_count: int = 0
    measure_count: int = 0
    epr_pairs: int = 0
    classical_messages: int = 0
    correction_count: int = 0
    reset_count: int = 0
    total_ops: int = 0
    ticks_elapsed: int = 0
    blocks: int = 0
    protocol: Mapping[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["protocol"] = dict(self.protocol)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _data_counts(gates: Iterable, qubits: Sequence) -> Counter:
    """Preparations, gates, measurements, corrections and resets of ordinary (non-protocol) gates."""
    gates = list(gates)
    c: Counter = Counter()
    explicit = {g.qubits[0] for g in gates if g.kind is GateKind.PREPARE}
    c["prep"] = sum(q not in explicit for q in qubits)
    for g in gates:
        if g.kind is GateKind.PREPARE:
            c["prep"] += 1
        elif g.kind in SINGLE_QUBIT_UNITARY or g.kind in CONTROLLED:
            c["gate"] += 1
        elif g.kind is GateKind.MEASURE:
            c["measure"] += 1
        elif g.kind in CONDITIONAL:
            c["correction"] += 1
        elif g.kind is GateKind.RESET:
            c["reset"] += 1
    return c


def _report(data: Counter, protocol: Counter, blocks: int, epr: int, messages: int, ticks: int,
            profile: AccountingProfile) -> ResourceReport:
    total = sum(profile[k] * data[k] for k in DATA_CATEGORIES) + sum(profile[r] * protocol[r] for r in PROTOCOL_ROLES)
    return ResourceReport(
        prep_count=data["prep"],
        gate_count=data["gate"],
        measure_count=data["measure"],
        epr_pairs=epr,
        classical_messages=messages,
        correction_count=data["correction"] + protocol["ent_correction"] + protocol["dis_correction"],
        reset_count=data["reset"] + protocol["reset_local"] + protocol["reset_remote"],
        total_ops=total,
        ticks_elapsed=ticks,
        blocks=blocks,
        protocol={r: protocol[r] for r in PROTOCOL_ROLES if protocol[r]},
    )


def count_monolithic(circuit: Circuit, profile: AccountingProfile = DEFAULT_PROFILE) -> ResourceReport:
    """One operation per qubit preparation, gate and measurement."""
    data = _data_counts(circuit.gates, circuit.qubits)
    ticks = len(layer_decompose(circuit).layers)
    return _report(data, Counter(), 0, 0, 0, ticks, profile)


def count_distributed(
    source: DistributedCircuit | Sequence[Mapping],
    profile: AccountingProfile = DEFAULT_PROFILE,
    *,
    program: int | None = None,
) -> ResourceReport:
    """Count a remapped circuit, or one shot of an execution trace.

    Served gates count as ordinary gates; protocol operations are itemized by
    role and weighted by ``profile``. For a trace only shot 0 is read, for
    ``program`` if given.
    """
    if isinstance(source, DistributedCircuit):
        return _count_circuit(source, profile)
    return _count_trace(source, profile, program)


def _count_circuit(dc: DistributedCircuit, profile: AccountingProfile) -> ResourceReport:
    from .engine.instructions import compile_instructions

    data_gates = [g for g, o in zip(dc.circuit.gates, dc.origin) if o.role in (None, "served")]
    data = _data_counts(data_gates, dc.data_qubits)
    protocol: Counter = Counter()
    for o in dc.origin:
        if o.role in _ROLE_EXPANSION:
            protocol.update(_ROLE_EXPANSION[o.role])
    horizon = compile_instructions(dc).horizon
    blocks = len(dc.blocks)
    return _report(data, protocol, blocks, blocks, 2 * blocks, horizon + 1, profile)


_TRACE_DATA = {
    "PREPARE": "prep", "SINGLE_GATE": "gate", "TWO_QUBIT_GATE": "gate", "MEASURE": "measure",
    "COND_CORRECTION": "correction", "RESET": "reset",
}


def _count_trace(trace: Sequence[Mapping], profile: AccountingProfile, program: int | None) -> ResourceReport:
    recs = [r for r in trace if r["shot"] == 0 and (program is None or r["program"] == program)]
    ancillas = {q for r in recs if r["kind"] in ("EPR_SEND", "EPR_RECV") for q in r["qubits"]}
    data_qubits = {q for r in recs for q in r.get("qubits", ()) if q not in ancillas}
    explicit = {r["qubits"][0] for r in recs if r["kind"] == "PREPARE" and r.get("role") is None}
    data: Counter = Counter(prep=len(data_qubits - explicit))
    protocol: Counter = Counter()
    for r in recs:
        role = r.get("role")
        if role in PROTOCOL_ROLES:
            protocol[role] += 1
        elif role in (None, "served") and r["kind"] in _TRACE_DATA:
            data[_TRACE_DATA[r["kind"]]] += 1
    epr = sum(r["kind"] == "EPR_SEND" for r in recs)
    messages = sum(r["kind"] == "CLASSICAL_SEND" for r in recs)
    ticks = max((r["tick"] for r in recs), default=-1) + 1
    return _report(data, protocol, epr, epr, messages, ticks, profile)


def qpe_sweep(ns: Iterable[int], profile: AccountingProfile = DEFAULT_PROFILE) -> list[tuple[int, int, int]]:
    """(n, monolithic total, distributed total) for QPE with the two-QPU split."""
    import numpy as np

    from .algorithms.qpe import qpe_allocation, qpe_circuit, qpe_topology
    from .remapper import remap

    rows = []
    u = np.diag([1.0, np.exp(2j * np.pi / 3)])
    for n in ns:
        circ = qpe_circuit(n, u)
        mono = count_monolithic(circ, profile).total_ops
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", CapacityWarning)
            dc = remap(circ, qpe_allocation(n), qpe_topology(n))
        dist = count_distributed(dc, profile).total_ops
        rows.append((n, mono, dist))
    return rows


def sweep_csv(rows: Iterable[tuple[int, int, int]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "monolithic", "distributed"])
    w.writerows(rows)
    return buf.getvalue()
