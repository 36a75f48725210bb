"""Maximum-likelihood amplitude estimation with power-law query counts."""

import numpy as np

from qdistsim.algorithms import PlaeConfig, binomial_oracle_estimate, plae_programs, plae_queries, ry_oracle
from qdistsim.engine import run_parallel
from qdistsim.topology import Topology

a = 0.3
topology = Topology.from_sizes([4, 4, 4])
for beta in (1.0, 0.5, 1 / 3):
    cfg = PlaeConfig(beta, 8, 1024)
    oracle, grover = ry_oracle(a)
    pp = plae_programs(oracle, grover, cfg, topology, copies=2)
    est = run_parallel(pp, topology, seed=5, trace_shots=0).value
    ref = binomial_oracle_estimate(a, plae_queries(cfg), cfg.shots, np.random.default_rng(5))
    print(f"beta={beta:.3f} queries={plae_queries(cfg)} estimate={est:.4f} classical model={ref:.4f}")
