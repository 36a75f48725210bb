"""Central merge functions that reduce per-program outputs to one result."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from ..errors import MergeArityError


@dataclass(frozen=True)
class Identity:
    """Return the single outcome, or the list of outcomes for several programs."""


@dataclass(frozen=True)
class WeightedSum:
    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if not all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")


@dataclass(frozen=True)
class BitAssembly:
    """Read the modal bitstring of one program as a binary fraction.

    Args:
        bit_order: output bit names; ``bit_order[0]`` is the most significant.
    """

    bit_order: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "bit_order", tuple(self.bit_order))

    @property
    def n(self) -> int:
        return len(self.bit_order)


@dataclass(frozen=True)
class NearestCentroid:
    """Group n*k overlap estimates into n rows of k and pick the closest centroid per row."""

    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class MaxLikelihoodPhase:
    """Maximum-likelihood amplitude over the grid ``{i / resolution}``.

    Args:
        queries: m_k for each program, in program order.
        resolution: number of grid intervals on [0, 1]; the grid has
            ``resolution + 1`` points.
    """

    queries: tuple[int, ...]
    resolution: int = 10_000

    def __post_init__(self) -> None:
        object.__setattr__(self, "queries", tuple(int(m) for m in self.queries))
        if self.resolution < 2:
            raise ValueError("grid resolution must be >= 2")


MergeSpec = Identity | WeightedSum | BitAssembly | NearestCentroid | MaxLikelihoodPhase


def assemble_bits(bits: Mapping[str, int] | Sequence[int], order: Sequence[str] | None = None) -> float:
    """Controller read-out of a phase register.

    Bits are placed in register order, the list is reversed, position ``i`` of
    the reversed list is weighted by ``2**i`` and the sum is divided by
    ``2**n``. The first register bit is thus the most significant.
    """
    if isinstance(bits, Mapping):
        order = list(order) if order is not None else sorted(bits)
        output = [int(bits[name]) for name in order]
    else:
        output = [int(b) for b in bits]
    output.reverse()
    decimal_value = sum(2**i * bit for i, bit in enumerate(output))
    return decimal_value / 2 ** len(output)


def overlap_to_distance(overlap: float) -> float:
    """Euclidean distance between unit vectors with ``|<a|b>|^2 = overlap`` (real, nonnegative inner product)."""
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * np.sqrt(min(1.0, max(0.0, overlap))))))


def nearest_centroid(distances: Sequence[float]) -> int:
    """Index of the smallest distance; ties go to the lowest index."""
    return int(np.argmin(np.asarray(distances, dtype=float)))


def success_probability(a: np.ndarray | float, m: int) -> np.ndarray:
    theta = np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))
    return np.sin((2 * m + 1) * theta) ** 2


def max_likelihood_amplitude(
    queries: Sequence[int], hits: Sequence[int], shots: Sequence[int], resolution: int = 10_000
) -> float:
    """Argmax over the amplitude grid of the summed binomial log-likelihoods.

    Ties (flat directions of the likelihood) resolve to the lowest grid point.
    """
    grid = np.arange(resolution + 1) / resolution
    loglik = np.zeros_like(grid)
    with np.errstate(divide="ignore"):
        for m, h, n in zip(queries, hits, shots):
            p = success_probability(grid, m)
            if h:
                loglik += h * np.log(p)
            if n - h:
                loglik += (n - h) * np.log1p(-p)
    return float(grid[int(np.argmax(loglik))])


def _expectation(outcome: Any) -> float:
    value = getattr(outcome, "expectation", outcome)
    if value is None:
        raise ValueError("outcome carries no expectation estimate")
    return float(value)


def merge(spec: MergeSpec, outcomes: Sequence[Any]) -> Any:
    """Apply ``spec`` to the per-program outcomes, in program order.

    Outcomes are :class:`~qdistsim.engine.runtime.Outcome` objects; WeightedSum
    and NearestCentroid also accept bare numbers (expectation values and
    overlap estimates respectively).
    """
    outcomes = list(outcomes)
    if isinstance(spec, Identity):
        return outcomes[0] if len(outcomes) == 1 else outcomes
    if isinstance(spec, WeightedSum):
        if len(spec.coefficients) != len(outcomes):
            raise MergeArityError(f"arity mismatch: {len(spec.coefficients)} coefficients, {len(outcomes)} outcomes")
        return float(sum(c * _expectation(o) for c, o in zip(spec.coefficients, outcomes)))
    if isinstance(spec, BitAssembly):
        if len(outcomes) != 1:
            raise MergeArityError(f"arity mismatch: BitAssembly reads 1 outcome, got {len(outcomes)}")
        counts = outcomes[0].counts
        modal = max(sorted(counts), key=lambda s: counts[s])
        names = getattr(outcomes[0], "outputs", None) or spec.bit_order
        return assemble_bits(dict(zip(names, (int(c) for c in modal))), spec.bit_order)
    if isinstance(spec, NearestCentroid):
        if len(outcomes) % spec.k:
            raise MergeArityError(f"arity mismatch: {len(outcomes)} outcomes is not a multiple of k={spec.k}")
        overlaps = [_expectation(o) for o in outcomes]
        rows = [overlaps[i : i + spec.k] for i in range(0, len(overlaps), spec.k)]
        return [nearest_centroid([overlap_to_distance(v) for v in row]) for row in rows]
    if isinstance(spec, MaxLikelihoodPhase):
        if len(spec.queries) != len(outcomes):
            raise MergeArityError(f"arity mismatch: {len(spec.queries)} queries, {len(outcomes)} outcomes")
        hits = [o.counts.get("1", 0) for o in outcomes]
        shots = [sum(o.counts.values()) for o in outcomes]
        return max_likelihood_amplitude(spec.queries, hits, shots, spec.resolution)
    raise TypeError(f"unknown merge spec {spec!r}")
