"""Energy of a two-qubit Pauli-sum Hamiltonian, one program per term, merged centrally."""

from qdistsim.algorithms import HamiltonianTerm, vqe_programs
from qdistsim.circuit import Circuit, cnot, ry, vq
from qdistsim.engine import WeightedSum, merge, run_parallel
from qdistsim.topology import Topology

terms = [
    HamiltonianTerm(-0.4804, "II"),
    HamiltonianTerm(0.3435, "ZI"),
    HamiltonianTerm(-0.4347, "IZ"),
    HamiltonianTerm(0.5716, "ZZ"),
    HamiltonianTerm(0.0910, "XX"),
    HamiltonianTerm(0.0910, "YY"),
]
ansatz = Circuit([ry(vq(0), 0.2), ry(vq(1), 3.0), cnot(vq(0), vq(1))])
topology = Topology.from_sizes([10, 10, 10])

exact = run_parallel(vqe_programs(terms, ansatz, topology, exact=True), topology, seed=0)
sampled = run_parallel(vqe_programs(terms, ansatz, topology, shots=4000), topology, seed=1, trace_shots=0)
print(f"exact energy   {exact.value:.6f}")
print(f"sampled energy {sampled.value:.6f}")

# the controller only ever adds up partial results
print("partial sums:", merge(WeightedSum((1.0, 1.0, 1.0)), [0.32072, -0.15644, -0.36714]))
