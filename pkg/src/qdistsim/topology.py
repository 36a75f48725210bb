"""QPU cluster description: the vector of QPUs with their qubit counts and gate times."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import TimingError

DEFAULT_DURATION = 1


@dataclass(frozen=True)
class QpuSpec:
    """One computing node.

    Args:
        node_id: unique node name, e.g. ``"QPU_0"``.
        num_qubits: number of logical qubit slots on the node.
        gate_times: optional gate-kind name -> duration in clock ticks. Kinds
            not listed take one tick.
    """

    node_id: str
    num_qubits: int
    gate_times: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.num_qubits < 1:
            raise ValueError(f"{self.node_id}: num_qubits must be >= 1, got {self.num_qubits}")
        times = {str(k).upper(): v for k, v in dict(self.gate_times).items()}
        for kind, ticks in times.items():
            if int(ticks) != ticks or ticks < 1:
                raise TimingError(f"unsatisfiable timing: {self.node_id} gate time {kind}={ticks}")
        object.__setattr__(self, "gate_times", MappingProxyType({k: int(v) for k, v in times.items()}))

    def duration(self, kind: str) -> int:
        return self.gate_times.get(str(kind).upper(), DEFAULT_DURATION)


@dataclass(frozen=True)
class Topology:
    """An ordered, completely connected set of QPUs."""

    qpus: tuple[QpuSpec, ...]

    def __post_init__(self) -> None:
        qpus = tuple(self.qpus)
        if not qpus:
            raise ValueError("topology needs at least one QPU")
        ids = [q.node_id for q in qpus]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate node ids in topology: {ids}")
        object.__setattr__(self, "qpus", qpus)

    @classmethod
    def from_sizes(cls, sizes: Iterable[int], prefix: str = "QPU_") -> "Topology":
        """``Topology.from_sizes([10, 10])`` gives nodes QPU_0 and QPU_1."""
        return cls(tuple(QpuSpec(f"{prefix}{i}", int(q)) for i, q in enumerate(sizes)))

    @property
    def node_ids(self) -> tuple[str, ...]:
        return tuple(q.node_id for q in self.qpus)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(q.num_qubits for q in self.qpus)

    @property
    def total_qubits(self) -> int:
        return sum(self.sizes)

    def __len__(self) -> int:
        return len(self.qpus)

    def __contains__(self, node_id: object) -> bool:
        return node_id in self.node_ids

    def spec(self, node_id: str) -> QpuSpec:
        for q in self.qpus:
            if q.node_id == node_id:
                return q
        raise KeyError(f"unknown node {node_id!r}")

    def index(self, node_id: str) -> int:
        try:
            return self.node_ids.index(node_id)
        except ValueError:
            raise KeyError(f"unknown node {node_id!r}") from None

    def capacity(self, node_id: str) -> int:
        return self.spec(node_id).num_qubits

    def to_dict(self) -> dict:
        return {
            "qpus": [
                {"id": q.node_id, "qubits": q.num_qubits, "gate_times": dict(q.gate_times)}
                for q in self.qpus
            ]
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Topology":
        return cls(
            tuple(
                QpuSpec(str(q["id"]), int(q["qubits"]), dict(q.get("gate_times", {})))
                for q in data["qpus"]
            )
        )

    @classmethod
    def load(cls, path: str | Path) -> "Topology":
        return cls.from_dict(json.loads(Path(path).read_text()))
