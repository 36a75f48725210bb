"""Amplitude encoding of real vectors with uniformly controlled RY rotations."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..circuit import Gate, QubitRef, cnot, ry


def normalize(vec: Sequence[float]) -> np.ndarray:
    """Pad to the next power of two (at least 2) with zeros and scale to unit norm."""
    v = np.asarray(vec, dtype=float).reshape(-1)
    if v.size == 0 or not np.all(np.isfinite(v)):
        raise ValueError("vector must be nonempty and finite")
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError("cannot normalize a zero vector")
    size = max(2, 1 << (v.size - 1).bit_length())
    out = np.zeros(size)
    out[: v.size] = v / norm
    return out


def num_qubits(dim: int) -> int:
    return max(1, (dim - 1).bit_length())


def uniformly_controlled_ry(angles: Sequence[float], controls: Sequence[QubitRef], target: QubitRef) -> list[Gate]:
    """Apply RY(angles[i]) to ``target`` when ``controls`` read i (controls[0] most significant).

    Built from 2^k RY rotations interleaved with CNOTs along a Gray code.
    """
    k = len(controls)
    alpha = np.asarray(angles, dtype=float)
    if alpha.size != 1 << k:
        raise ValueError("need 2**len(controls) angles")
    if k == 0:
        return [ry(target, float(alpha[0]))]
    size = 1 << k
    gray = [j ^ (j >> 1) for j in range(size)]
    signs = np.array([[(-1) ** bin(i & gray[j]).count("1") for i in range(size)] for j in range(size)])
    theta = signs @ alpha / size
    gates: list[Gate] = []
    for j in range(size):
        gates.append(ry(target, float(theta[j])))
        changed = gray[j] ^ gray[(j + 1) % size]
        bit = changed.bit_length() - 1
        gates.append(cnot(controls[k - 1 - bit], target))
    return gates


def amplitude_encoding(vec: Sequence[float], qubits: Sequence[QubitRef]) -> list[Gate]:
    """Gates taking |0...0> on ``qubits`` (first most significant) to the normalized real ``vec``."""
    v = normalize(vec)
    n = len(qubits)
    if v.size != 1 << n:
        raise ValueError(f"vector of padded length {v.size} does not fit {n} qubits")
    gates: list[Gate] = []
    for level in range(n):
        blocks = v.reshape(1 << level, 2, -1)
        if level == n - 1:
            # leaves keep their signs so negative amplitudes come out right
            angles = 2 * np.arctan2(blocks[:, 1, 0], blocks[:, 0, 0])
        else:
            norms = np.linalg.norm(blocks, axis=2)
            angles = 2 * np.arctan2(norms[:, 1], norms[:, 0])
        gates += uniformly_controlled_ry(angles, qubits[:level], qubits[level])
    return gates
