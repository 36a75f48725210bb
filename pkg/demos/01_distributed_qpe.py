"""Three-bit phase estimation of diag(1, e^{2 pi i / 3}) split over two QPUs."""

from qdistsim.algorithms import phase_unitary, qpe_parallel_program, qpe_topology
from qdistsim.engine import run_parallel
from qdistsim.metrics import count_distributed

n = 3
topology = qpe_topology(n)
pp = qpe_parallel_program(n, phase_unitary(1 / 3), shots=1000)
result = run_parallel(pp, topology, seed=7)

counts = result.outcomes[0].counts
for bits, c in sorted(counts.items(), key=lambda kv: -kv[1])[:4]:
    print(f"{bits}  {c}")
print("estimated phase", result.value)

report = count_distributed(result.distributed[0])
print(f"{report.blocks} cat blocks, {report.epr_pairs} EPR pairs, {report.classical_messages} messages")
