"""Operation counts of QPE, monolithic against distributed, for n = 1..11."""

from qdistsim.metrics import qpe_sweep, sweep_csv

rows = qpe_sweep(range(1, 12))
print(sweep_csv(rows), end="")
for n, mono, dist in rows:
    assert dist - mono == 12 * n
