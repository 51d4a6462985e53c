import numpy as np
import pytest

from rgmsfem.field import CoefficientField, generate_channels
from rgmsfem.grid import build_geometry


def linear_g(x, y):
    return x + y


@pytest.fixture
def small_geom():
    return build_geometry(4, 4, 5)


@pytest.fixture
def small_field(small_geom):
    return generate_channels(small_geom, 1e4, 3, margin=0)


def random_field(geom, seed=0, contrast=1e3):
    """Log-uniform piecewise-constant coefficient, independent of the channel generator."""
    rng = np.random.default_rng(seed)
    return CoefficientField(contrast ** rng.uniform(0, 1, geom.n_elements), geom.nx, geom.ny)


# acceptance lines are collected here and repeated in the terminal summary
ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def acceptance_log(request):
    return request.config.stash[ACCEPTANCE]


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
