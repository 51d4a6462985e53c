"""Shared setup for a run: geometry, coefficient, partition of unity and fine reference."""
from dataclasses import dataclass

import numpy as np

from .assembly import fine_reference_solve
from .coarse import GlobalOperators, build_coarse_space, error_report, solve_coarse
from .field import generate_channels, load_field
from .grid import build_geometry
from .pou import build_pou, mass_weight
from .spectral import reduce_all


@dataclass
class Problem:
    """Everything that does not depend on the snapshot settings."""

    config: object
    geom: object
    field: object
    pou: object
    weight: object
    ops: GlobalOperators
    u_fine: np.ndarray

    @property
    def g(self):
        return self.config.boundary()

    @property
    def f(self):
        return self.config.f


@dataclass
class CoarseRun:
    bases: dict
    space: object
    solution: object
    report: object


def make_field(config, geom):
    if config.field_path:
        return load_field(config.field_path, geom)
    margin = None if config.field_margin < 0 else config.field_margin
    return generate_channels(geom, config.contrast, config.field_seed, margin=margin)


def setup(config, field=None):
    """Build the problem for ``config``; ``field`` overrides the configured coefficient."""
    geom = build_geometry(config.coarse_nx, config.coarse_ny, config.fine_per_coarse)
    field = make_field(config, geom) if field is None else field
    field.check(geom)
    pou = build_pou(geom, field, config.pou_mode)
    weight = mass_weight(geom, field, pou, config.kappa_tilde_mode)
    ops = GlobalOperators(geom, field, config.f)
    u = fine_reference_solve(geom, field, config.f, config.boundary(), config.solver)
    return Problem(config, geom, field, pou, weight, ops, u)


def coarse_from_bases(problem, bases):
    space = build_coarse_space(problem.geom, problem.pou, bases)
    sol = solve_coarse(space, problem.geom, problem.field, problem.f, problem.g, problem.ops)
    rep = error_report(problem.u_fine, sol.u_H, problem.geom, problem.field, space, bases, problem.ops)
    return CoarseRun(bases, space, sol, rep)


def coarse_run(problem, config=None, threads=1):
    """Offline bases plus coarse solve; ``config`` overrides the snapshot settings."""
    config = problem.config if config is None else config
    bases = reduce_all(problem.geom, problem.field, config, problem.weight, threads)
    return coarse_from_bases(problem, bases)
