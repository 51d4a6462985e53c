import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rgmsfem.field import CoefficientField
from rgmsfem.grid import build_geometry
from rgmsfem.pou import (block_harmonic_extension, build_pou, center_gradients, mass_weight,
                         weighted_kappa)

from conftest import random_field
from oracles import dense_dirichlet, dense_region


@pytest.mark.parametrize("mode", ["standard", "multiscale"])
def test_partition_of_unity(small_geom, small_field, mode):
    pou = build_pou(small_geom, small_field, mode)
    chi = pou.chi.toarray()
    assert np.allclose(chi.sum(axis=0), 1.0, atol=1e-10)
    assert chi.min() >= -1e-12
    for i in range(small_geom.n_coarse_nodes):
        inside = set(small_geom.box_nodes(small_geom.omega_box(i)))
        assert set(np.flatnonzero(chi[i])) <= inside
        # nodal value one at its own coarse node, zero at the others
        assert np.isclose(chi[i, small_geom.coarse_fine_node(i)], 1.0)


def test_multiscale_equals_hats_for_constant_kappa():
    # bilinear hats are discretely harmonic on a uniform grid
    g = build_geometry(3, 2, 4)
    one = CoefficientField.uniform(g)
    a = build_pou(g, one, "standard").chi.toarray()
    b = build_pou(g, one, "multiscale").chi.toarray()
    assert np.allclose(a, b, atol=1e-12)


def test_block_extension_matches_dense_solve():
    g = build_geometry(2, 2, 5)
    f = random_field(g, 8, 1e5)
    nodes, vals, corners = block_harmonic_extension(g, f, 1, 0)
    box = g.coarse_block(1, 0)
    dn, K, _ = dense_region(g, f.values, g.box_elements(box))
    assert np.array_equal(dn, nodes)
    bnd = np.isin(dn, g.box_boundary_nodes(box))
    hats = build_pou(g, f, "standard")
    for c, v in zip(corners, vals):
        expect = dense_dirichlet(K, np.flatnonzero(~bnd), np.flatnonzero(bnd), hats.on_nodes(c, dn[bnd]))
        assert np.allclose(v, expect, atol=1e-9)


def test_weighted_kappa_standard_hats():
    # for hats, sum_i |grad chi_i|^2 = (2 / H^2) ((1-s)^2 + s^2 + (1-t)^2 + t^2) in block coordinates
    g = build_geometry(4, 4, 5)
    H = 1 / 4
    w = weighted_kappa(g, CoefficientField.uniform(g), build_pou(g, None, "standard")).values
    ex, ey = np.meshgrid(np.arange(g.nx), np.arange(g.ny))
    s = ((ex.ravel() + 0.5) % 5) / 5
    t = ((ey.ravel() + 0.5) % 5) / 5
    expect = 2 / H ** 2 * ((1 - s) ** 2 + s ** 2 + (1 - t) ** 2 + t ** 2)
    assert np.allclose(w, expect, rtol=1e-12)


def test_center_gradients_of_linear():
    g = build_geometry(2, 3, 3)
    x, y = g.node_coords.T
    gx, gy = center_gradients(g, 2 * x - 3 * y)
    assert np.allclose(gx, 2) and np.allclose(gy, -3)


def test_mass_weight_modes(small_geom, small_field):
    assert mass_weight(small_geom, small_field) is small_field
    pou = build_pou(small_geom, small_field, "multiscale")
    w = mass_weight(small_geom, small_field, pou, "pou_weighted")
    assert np.all(w.values >= 0)
    with pytest.raises(ValueError):
        mass_weight(small_geom, small_field, None, "pou_weighted")
    with pytest.raises(ValueError):
        mass_weight(small_geom, small_field, pou, "other")
    with pytest.raises(ValueError):
        build_pou(small_geom, small_field, "other")


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(1.0, 1e6))
def test_multiscale_pou_invariants(seed, contrast):
    g = build_geometry(3, 3, 3)
    chi = build_pou(g, random_field(g, seed, contrast), "multiscale").chi.toarray()
    assert np.allclose(chi.sum(axis=0), 1.0, atol=1e-9)
    assert chi.min() >= -1e-12 and chi.max() <= 1 + 1e-12
