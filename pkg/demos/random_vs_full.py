"""
Random boundary data versus all harmonic snapshots
==================================================

The full snapshot space needs one local solve per perimeter node (104 per
interior neighborhood). Random Gaussian boundary data needs only
``k_nb + p_bf`` solves. This script compares the coarse errors of both for
``k_nb`` from 5 to 25 on one channel field.
"""
import time

from rgmsfem.config import RunConfig
from rgmsfem.pipeline import coarse_run, setup

config = RunConfig(field_seed=0, seed=0)
t0 = time.perf_counter()
problem = setup(config)
print(f"fine reference solve and partition of unity: {time.perf_counter() - t0:.1f}s")

print(f"{'k_nb':>4} {'dim':>5} {'ratio%':>7} {'H1 full%':>9} {'H1 rand%':>9}")
for k in (5, 10, 15, 20, 25):
    full = coarse_run(problem, config.with_(k_nb=k, snapshot_mode="full"), threads=4)
    rand = coarse_run(problem, config.with_(k_nb=k, snapshot_mode="random"), threads=4)
    print(f"{k:>4} {rand.space.dim:>5} {rand.report.ratio:>7.2f} {full.report.h1:>9.2f} {rand.report.h1:>9.2f}")

# The ratio column is the share of the 104 full solves actually performed; at
# k_nb=10 the random space uses 14 solves per neighborhood, i.e. 13.46%.
