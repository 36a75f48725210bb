"""Swap-test overlaps and a few rounds of k-means on the unit circle."""

import math
import warnings

import numpy as np

from qdistsim.algorithms import kmeans, kmeans_round
from qdistsim.engine import run_parallel
from qdistsim.errors import CapacityWarning
from qdistsim.topology import Topology

rng = np.random.default_rng(0)
angles = np.concatenate([rng.normal(0.3, 0.1, 6), rng.normal(1.3, 0.1, 6)])
points = [[math.cos(t), math.sin(t)] for t in angles]
topology = Topology.from_sizes([12, 12, 12])

pp = kmeans_round(points[:2], [points[0], points[-1]], topology, shots=2000)
res = run_parallel(pp, topology, seed=3, trace_shots=0)
print("overlap estimates:", [round(o.expectation, 3) for o in res.outcomes])

with warnings.catch_warnings():
    warnings.simplefilter("ignore", CapacityWarning)
    assign, centroids = kmeans(points, 2, topology, shots=2000, seed=3)
for t, a in zip(angles, assign):
    print(f"angle {t:+.2f} -> cluster {a}")
