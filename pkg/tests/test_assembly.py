import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from rgmsfem.assembly import (DirichletSolver, SolverError, assemble_mass, assemble_stiffness, backward_error,
                              element_mass, element_stiffness, fine_reference_solve, load_vector, pcg,
                              solve_dirichlet)
from rgmsfem.field import CoefficientField
from rgmsfem.grid import Box, build_geometry

from conftest import linear_g, random_field
from oracles import dense_assembly, quad_element

def test_unit_element_values():
    K = element_stiffness(1.0, 1.0)
    assert np.allclose(np.diag(K), 2 / 3)
    assert np.isclose(K[0, 2], -1 / 3) and np.isclose(K[1, 3], -1 / 3)
    assert np.isclose(K[0, 1], -1 / 6)


@pytest.mark.parametrize("hx,hy", [(1.0, 1.0), (0.1, 0.25), (2.0, 0.5)])
def test_element_matrices_match_quadrature(hx, hy):
    K, M = quad_element(hx, hy)
    assert np.allclose(element_stiffness(hx, hy), K, atol=1e-14)
    assert np.allclose(element_mass(hx, hy), M, atol=1e-14)
    assert np.isclose(element_mass(hx, hy).sum(), hx * hy)


def test_global_matches_dense_oracle():
    g = build_geometry(2, 2, 2)
    f = random_field(g, 1)
    K, M = dense_assembly(g, f.values)
    assert np.allclose(assemble_stiffness(g, f).matrix.toarray(), K, atol=1e-12)
    assert np.allclose(assemble_mass(g, f).matrix.toarray(), M, atol=1e-14)


def test_stiffness_properties(small_geom, small_field):
    A = assemble_stiffness(small_geom, small_field).matrix
    assert (A - A.T).nnz == 0
    assert np.allclose(A @ np.ones(A.shape[0]), 0, atol=1e-8 * abs(A).max())
    A10 = assemble_stiffness(small_geom, small_field.scaled(10)).matrix
    assert np.allclose(A10.toarray(), 10 * A.toarray())


def test_stiffness_definite_after_constraint():
    g = build_geometry(2, 2, 2)
    A = assemble_stiffness(g, random_field(g, 2)).matrix.toarray()
    assert np.linalg.eigvalsh(A)[1] > 0
    keep = np.arange(1, g.n_nodes)
    assert np.linalg.eigvalsh(A[np.ix_(keep, keep)])[0] > 0


def test_mass_properties():
    g = build_geometry(2, 3, 3)
    ones = CoefficientField.uniform(g)
    M = assemble_mass(g, ones).matrix
    assert np.isclose(M.sum(), 1.0)
    f = random_field(g, 4)
    Mk = assemble_mass(g, f)
    one = np.ones(len(Mk.nodes))
    assert np.isclose(Mk.quad(one), f.values.sum() * g.hx * g.hy)
    assert np.allclose(assemble_mass(g, f.scaled(2)).matrix.toarray(), 2 * Mk.matrix.toarray())


def test_region_assembly_is_restriction():
    g = build_geometry(3, 3, 2)
    f = random_field(g, 5)
    box = Box(2, 4, 0, 6)
    op = assemble_stiffness(g, f, box)
    w = np.zeros(g.n_elements)
    w[g.box_elements(box)] = f.values[g.box_elements(box)]
    full = assemble_stiffness(g, np.where(w > 0, w, 0.0)).matrix.toarray()
    assert np.allclose(op.matrix.toarray(), full[np.ix_(op.nodes, op.nodes)])


def test_linear_reproduced():
    g = build_geometry(4, 4, 5)
    u = fine_reference_solve(g, CoefficientField.uniform(g), 0.0, linear_g)
    xy = g.node_coords
    assert np.allclose(u, xy[:, 0] + xy[:, 1], atol=1e-9)


def test_constant_data():
    g = build_geometry(3, 3, 3)
    u = fine_reference_solve(g, random_field(g, 0, 1e6), 0.0, 2.5)
    assert np.allclose(u, 2.5, atol=1e-9)


def test_small_problem_matches_dense_solve():
    g = build_geometry(1, 1, 2)
    f = random_field(g, 3)
    Kk, _ = dense_assembly(g, f.values)
    # load for f = 1: unweighted mass applied to ones
    F = dense_assembly(g, np.ones(g.n_elements))[1] @ np.ones(g.n_nodes)
    bnd = g.boundary_nodes
    free = np.setdiff1d(np.arange(g.n_nodes), bnd)
    gb = linear_g(*g.node_coords[bnd].T)
    expect = np.zeros(g.n_nodes)
    expect[bnd] = gb
    expect[free] = np.linalg.solve(Kk[np.ix_(free, free)], F[free] - Kk[np.ix_(free, bnd)] @ gb)
    u = fine_reference_solve(g, f, 1.0, linear_g)
    assert np.allclose(u, expect, atol=1e-12)


def test_energy_positive():
    g = build_geometry(3, 3, 4)
    f = random_field(g, 6)
    u = fine_reference_solve(g, f, 0.0, linear_g)
    A = assemble_stiffness(g, f).matrix
    e = u @ A @ u
    assert np.isfinite(e) and e > 0


@pytest.mark.parametrize("seed", range(3))
def test_pcg_matches_direct(seed):
    g = build_geometry(2, 2, 4)
    f = random_field(g, seed, 1e4)
    direct = fine_reference_solve(g, f, 1.0, linear_g, "direct")
    it = fine_reference_solve(g, f, 1.0, linear_g, "pcg")
    assert np.max(np.abs(direct - it)) <= 1e-10 * np.abs(direct).max()


def test_pcg_iteration_cap():
    A = sp.diags([1.0, 1e8, 3.0, 7.0]).tocsr() + sp.csr_matrix(np.full((4, 4), 0.5))
    with pytest.raises(SolverError):
        pcg(A, np.ones(4), maxiter=1)


def test_multiple_rhs_and_residual_check(small_geom, small_field):
    op = assemble_stiffness(small_geom, small_field)
    solver = DirichletSolver(op, small_geom.boundary_nodes)
    data = np.random.default_rng(0).standard_normal((len(solver.bidx), 3))
    U = solver.solve(data)
    for j in range(3):
        assert np.allclose(U[:, j], solve_dirichlet(op, None, small_geom.boundary_nodes, data[:, j]))
    r = backward_error(solver.Aff, U[solver.fidx], -(solver.Afb @ data))
    assert np.all(r <= 1e-10)


def test_load_vector_integrates():
    g = build_geometry(2, 2, 3)
    assert np.isclose(load_vector(g, 1.0).sum(), 1.0)
    F = load_vector(g, lambda x, y: x)
    assert np.isclose(F.sum(), 0.5)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(1.0, 1e6))
def test_stiffness_symmetric_psd(seed, contrast):
    g = build_geometry(2, 2, 2)
    A = assemble_stiffness(g, random_field(g, seed, contrast)).matrix
    assert (A - A.T).nnz == 0
    lam = np.linalg.eigvalsh(A.toarray())
    assert lam[0] >= -1e-10 * lam[-1]
