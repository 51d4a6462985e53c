"""Generalized multiscale finite elements with randomized oversampled snapshots.

Typical use::

    from rgmsfem import RunConfig, setup, coarse_run
    problem = setup(RunConfig(k_nb=10))
    run = coarse_run(problem)
    print(run.report.h1)
"""
from .config import RunConfig, load_config, parse_config
from .field import CoefficientField, generate_channels, load_field, save_field
from .grid import Box, GridGeometry, Neighborhood, build_geometry, neighborhood
from .pipeline import Problem, coarse_from_bases, coarse_run, setup

__all__ = [
    "Box", "CoefficientField", "GridGeometry", "Neighborhood", "Problem", "RunConfig",
    "build_geometry", "coarse_from_bases", "coarse_run", "generate_channels", "load_config",
    "load_field", "neighborhood", "parse_config", "save_field", "setup",
]
__version__ = "0.1.0"
