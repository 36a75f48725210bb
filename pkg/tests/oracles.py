"""Independent dense-matrix references used by the tests.

Everything here builds full 2^n x 2^n operators with Kronecker products and
never touches the package's tensor code, so agreement is meaningful.
"""

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.diag([1, -1]).astype(complex)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}
P0 = np.diag([1, 0]).astype(complex)
P1 = np.diag([0, 1]).astype(complex)


def embed(op, pos, n):
    """``op`` on qubit ``pos`` of ``n`` (qubit 0 most significant)."""
    mats = [I2] * n
    mats[pos] = op
    out = np.array([[1]], dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def controlled_op(u, c, t, n):
    return embed(P0, c, n) + embed(P1, c, n) @ embed(u, t, n)


def pauli_matrix(label):
    out = np.array([[1]], dtype=complex)
    for ch in label:
        out = np.kron(out, PAULI[ch])
    return out


def circuit_unitary(circuit, qubits):
    """Dense unitary of a purely unitary circuit over ``qubits`` (first most significant)."""
    from qdistsim.circuit import CONTROLLED, single_qubit_matrix

    pos = {q: i for i, q in enumerate(qubits)}
    n = len(qubits)
    u = np.eye(2**n, dtype=complex)
    for g in circuit.gates:
        m = single_qubit_matrix(g)
        if g.kind in CONTROLLED:
            op = controlled_op(m, pos[g.qubits[0]], pos[g.qubits[1]], n)
        else:
            op = embed(m, pos[g.qubits[0]], n)
        u = op @ u
    return u


def random_unitary(rng, dim=2):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(a)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_product_state(rng):
    """Random single-qubit pure state."""
    v = rng.normal(size=2) + 1j * rng.normal(size=2)
    return v / np.linalg.norm(v)


def random_circuit(rng, width, n_gates, qubits=None):
    """Random unitary circuit over ``qubits`` (default vq(0..width-1))."""
    from qdistsim import circuit as c

    qubits = qubits or [c.vq(i) for i in range(width)]
    singles = [c.x, c.y, c.z, c.h, c.s, c.t]
    rots = [c.rx, c.ry, c.rz, c.phase]
    gates = []
    for _ in range(n_gates):
        r = rng.random()
        if width >= 2 and r < 0.45:
            a, b = rng.choice(width, size=2, replace=False)
            qa, qb = qubits[a], qubits[b]
            k = rng.integers(4)
            if k == 0:
                gates.append(c.cnot(qa, qb))
            elif k == 1:
                gates.append(c.cz(qa, qb))
            elif k == 2:
                gates.append(c.cphase(qa, qb, rng.uniform(-np.pi, np.pi)))
            else:
                gates.append(c.controlled(qa, qb, random_unitary(rng)))
        elif r < 0.7:
            q = qubits[rng.integers(width)]
            gates.append(rots[rng.integers(len(rots))](q, rng.uniform(-np.pi, np.pi)))
        elif r < 0.9:
            gates.append(singles[rng.integers(len(singles))](qubits[rng.integers(width)]))
        else:
            gates.append(c.custom(qubits[rng.integers(width)], random_unitary(rng)))
    return c.Circuit(gates, qubits)


def global_phase_distance(a, b):
    overlap = np.vdot(b, a)
    ph = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a - ph * b)))


def random_split(rng, width, sizes=None):
    """Random allocation of vq(0..width-1) onto two QPUs, both used when width > 1."""
    from qdistsim.circuit import QubitRef, vq
    from qdistsim.scheduler import Allocation
    from qdistsim.topology import Topology

    k = int(rng.integers(1, width)) if width > 1 else 1
    perm = rng.permutation(width)
    mapping = {}
    for slot, i in enumerate(perm[:k]):
        mapping[vq(int(i))] = QubitRef("QPU_0", slot)
    for slot, i in enumerate(perm[k:]):
        mapping[vq(int(i))] = QubitRef("QPU_1", slot)
    sizes = sizes or [k + width, width - k + width]
    return Allocation(mapping), Topology.from_sizes(sizes)


def deferred_distance(circ, alloc, topo):
    """Distance up to global phase between the monolithic and the remapped circuit's data state."""
    from qdistsim.backend import run_circuit
    from qdistsim.remapper import remap

    mono, _ = run_circuit(circ, deferred=True)
    dc = remap(circ, alloc, topo)
    dist, _ = run_circuit(dc.circuit, deferred=True)
    for q in dc.ancillas:
        assert dist.is_zero(q, 1e-12), f"ancilla {q} left excited"
    data = dist.reduced([alloc[q] for q in circ.qubits])
    return global_phase_distance(data, mono.amplitudes), dc
