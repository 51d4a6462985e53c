"""Table-style studies built on the pipeline. Each returns ``(header, rows)``."""
import numpy as np

from .adaptive import adaptive_loop
from .analysis import lemma1_certificate
from .grid import neighborhood
from .pipeline import coarse_run, setup

K_VALUES = (5, 10, 15, 20, 25)
BUFFER_VALUES = (4, 10, 15, 20)
OVERSAMPLE_VALUES = (0, 2, 4, 7)


class Result:
    """Rows plus the last coarse run (for solution dumps)."""

    def __init__(self, header, rows, field=None):
        self.header = header
        self.rows = rows
        self.field = field


def _try_run(problem, cfg, threads):
    """Coarse run, or None when the snapshot space is too small for ``k_nb`` (e.g. full mode, large k)."""
    try:
        return coarse_run(problem, cfg, threads)
    except ValueError:
        if cfg.snapshot_mode == "random":
            raise
        return None


def _errs(run):
    return (run.report.l2, run.report.h1) if run is not None else (np.nan, np.nan)


def run_compare(config, threads=1, problem=None, k_values=K_VALUES, other="full"):
    """Random snapshots against ``other`` (full or skin) for each ``k_nb``."""
    problem = setup(config) if problem is None else problem
    rows, last = [], None
    for k in k_values:
        rand = coarse_run(problem, config.with_(k_nb=k, snapshot_mode="random"), threads)
        ref = _try_run(problem, config.with_(k_nb=k, snapshot_mode=other), threads)
        rows.append((rand.space.dim, rand.report.ratio, *_errs(ref), rand.report.l2, rand.report.h1))
        last = rand
    header = ("dim", "ratio", f"l2_{other}", f"h1_{other}", "l2_rand", "h1_rand")
    return Result(header, rows, last.solution.u_H if last else None)


def run_skin_compare(config, threads=1, problem=None, k_values=K_VALUES):
    return run_compare(config, threads, problem, k_values, other="skin")


def run_buffer_study(config, threads=1, problem=None, values=BUFFER_VALUES, k_nb=20):
    problem = setup(config) if problem is None else problem
    rows, run = [], None
    for p in values:
        run = coarse_run(problem, config.with_(k_nb=k_nb, p_bf=p, snapshot_mode="random"), threads)
        rows.append((p, run.space.dim, run.report.ratio, run.report.l2, run.report.h1))
    return Result(("p_bf", "dim", "ratio", "l2_rand", "h1_rand"), rows, run.solution.u_H)


def run_oversampling_study(config, threads=1, problem=None, values=OVERSAMPLE_VALUES, k_nb=20):
    problem = setup(config) if problem is None else problem
    rows, run = [], None
    for t in values:
        run = coarse_run(problem, config.with_(k_nb=k_nb, oversample_t=t, snapshot_mode="random"), threads)
        rows.append((t, run.space.dim, run.report.l2, run.report.h1))
    return Result(("t", "dim", "l2_rand", "h1_rand"), rows, run.solution.u_H)


def run_adaptive(config, threads=1, problem=None):
    problem = setup(config) if problem is None else problem
    last = {}

    def keep(row, run, indicators):
        last["u"] = run.solution.u_H

    rows = adaptive_loop(config.with_(snapshot_mode="random"), problem, threads, callback=keep)
    out = [(r.iteration, r.dim, r.marked_count, r.l2, r.h1, r.sum_eta2) for r in rows]
    return Result(("iter", "dim", "marked_count", "l2_err", "h1_err", "sum_eta2"), out, last.get("u"))


def lemma_certificates(config, problem=None):
    """Certificates for every interior node and seeds ``seed .. seed + lemma_seeds - 1``."""
    problem = setup(config) if problem is None else problem
    geom = problem.geom
    certs = []
    for i in geom.interior_coarse_nodes:
        nb = neighborhood(geom, i, config.oversample_t)
        for s in range(config.seed, config.seed + config.lemma_seeds):
            certs.append(lemma1_certificate(geom, problem.field, nb, config.lemma_k, config.lemma_l, s,
                                            config.lemma_tests, problem.weight))
    return certs


def run_lemma_check(config, threads=1, problem=None):
    certs = lemma_certificates(config, problem)
    rows = [(c.node, c.seed, c.k, c.l, c.m, c.lambda_k1, c.hs_norm, c.max_ratio, int(c.passed),
             c.max_ratio_stated, int(c.passed_stated), int(c.optimal_ok)) for c in certs]
    header = ("nbhd", "seed", "k", "l", "m", "lambda_k1", "HS_norm", "max_ratio_observed_to_bound", "pass",
              "max_ratio_stated_form", "pass_stated_form", "optimal_le_constructed")
    return Result(header, rows)


def run_solve_fine(config, threads=1, problem=None):
    problem = setup(config) if problem is None else problem
    u, A = problem.u_fine, problem.ops.A
    row = (problem.geom.nx, problem.geom.ny, problem.geom.n_nodes, float(u.min()), float(u.max()),
           float(np.sqrt(u @ (A @ u))))
    return Result(("nx", "ny", "n_nodes", "u_min", "u_max", "energy_norm"), [row], u)

