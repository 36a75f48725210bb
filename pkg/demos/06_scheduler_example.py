"""Ten width-4 programs on two 10-qubit QPUs: two rounds, two distributed programs."""

from qdistsim.circuit import Circuit, cnot, h, measure, vq
from qdistsim.engine import run_parallel
from qdistsim.scheduler import Program, build_parallel_program
from qdistsim.topology import Topology

topology = Topology.from_sizes([10, 10])
ghz = Circuit([h(vq(0))] + [cnot(vq(i), vq(i + 1)) for i in range(3)] + [measure(vq(i), f"m{i}") for i in range(4)])
pp = build_parallel_program(topology, [Program(ghz, 200) for _ in range(10)])

print("rounds:", pp.schedule.one_based())
print("distributed programs:", [j + 1 for j in pp.distributed()])
# every slot is taken, so the split programs' cat ancillas overflow (a CapacityWarning)
result = run_parallel(pp, topology, seed=11)
for report in result.reports:
    print(report.to_dict())
print("program 3 counts:", result.outcomes[2].counts)
