"""
Adaptive enrichment
===================

Start with 5 modes per interior node and let the residual indicators decide
where to add more. Each marked node gets two new modes selected from three
fresh random snapshots. The run stops once the energy error reaches that of
the uniform space with 25 modes per node.
"""
from rgmsfem.adaptive import adaptive_loop
from rgmsfem.config import RunConfig
from rgmsfem.pipeline import coarse_run, setup

config = RunConfig(field_seed=0, seed=0)
problem = setup(config)

uniform = coarse_run(problem, config.with_(k_nb=25), threads=4)
print(f"uniform k_nb=25: dim {uniform.space.dim}, H1 error {uniform.report.h1:.2f}%")


def show(row, run, indicators):
    print(f"iter {row.iteration:>2}  dim {row.dim:>5}  H1 {row.h1:6.2f}%  "
          f"sum eta^2 {row.sum_eta2:9.3e}  marked {row.marked_count}")


rows = adaptive_loop(config.with_(k_nb=5, max_iter=60, target_err=uniform.report.h1), problem,
                     threads=4, callback=show)
last = rows[-1]
print(f"adaptive: {last.h1:.2f}% at dim {last.dim} ({100 * last.dim / uniform.space.dim:.0f}% of uniform)")
