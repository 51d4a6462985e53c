import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from rgmsfem.config import RunConfig
from rgmsfem.field import CoefficientField
from rgmsfem.grid import build_geometry, neighborhood
from rgmsfem.snapshot import full_snapshots, random_snapshots
from rgmsfem.spectral import (constant_basis, local_basis, local_matrices, offline_reduce, reduce_all,
                              row_basis, spectrum_rows)

from conftest import random_field
from oracles import dense_geneig, dense_region


@pytest.fixture
def toy():
    g = build_geometry(4, 4, 2)
    nb = neighborhood(g, g.coarse_id(2, 2), 1)
    return g, random_field(g, 4, 1e4), nb


def test_row_basis_rank():
    rng = np.random.default_rng(0)
    B = rng.standard_normal((3, 20))
    Psi = np.vstack([B, B[0] + 2 * B[1], B.sum(axis=0)])
    Q = row_basis(Psi)
    assert Q.shape == (3, 20)
    assert np.allclose(Q @ Q.T, np.eye(3), atol=1e-12)
    # same row space
    assert np.allclose(Psi @ Q.T @ Q, Psi, atol=1e-12)


def test_offline_reduce_matches_dense_oracle(toy):
    g, f, nb = toy
    snaps = full_snapshots(g, f, nb)
    basis = offline_reduce(snaps, g, f, f, 6)
    dn, K, M = dense_region(g, f.values, nb.omega_elements)
    assert np.array_equal(dn, basis.nodes) and len(dn) <= 200
    # independent reduction: Gram-Schmidt basis of the (rank-deficient) snapshot rows
    Q, r, _ = sla.qr(snaps.rows.T, mode="economic", pivoting=True)
    Q = Q[:, np.abs(np.diag(r)) > 1e-10 * abs(r[0, 0])].T
    lam, W = dense_geneig(Q @ K @ Q.T, Q @ M @ Q.T)
    assert np.allclose(basis.eigenvalues, lam[:6], atol=1e-9 * lam[6], rtol=1e-9)
    assert np.isclose(basis.excluded, lam[6], rtol=1e-9)
    ref = (W[:, :6].T @ Q)
    for a, b in zip(basis.modes, ref):
        s = np.sign(a @ M @ b)
        assert np.allclose(a, s * b, atol=1e-9 * np.abs(b).max())


def test_modes_orthonormal_and_constant_first(toy):
    g, f, nb = toy
    snaps = random_snapshots(g, f, nb, 5, 4, 0)
    A, M = local_matrices(g, f, f, nb.omega)
    b = offline_reduce(snaps, g, f, f, 6, (A, M))
    G = b.modes @ (M.matrix @ b.modes.T)
    assert np.allclose(G, np.eye(6), atol=1e-9)
    E = b.modes @ (A.matrix @ b.modes.T)
    assert np.allclose(E, np.diag(b.eigenvalues), atol=1e-8 * b.eigenvalues.max())
    assert abs(b.eigenvalues[0]) <= 1e-10 * b.eigenvalues[-1]
    assert np.ptp(b.modes[0]) <= 1e-9 * np.abs(b.modes[0]).max()
    assert np.all(np.diff(b.all_eigenvalues) >= 0)
    assert b.excluded == b.all_eigenvalues[6]


def test_reduce_errors(toy):
    g, f, nb = toy
    snaps = random_snapshots(g, f, nb, 2, 0, 0)
    with pytest.raises(ValueError):
        offline_reduce(snaps, g, f, f, 4)
    other = local_matrices(g, f, f, neighborhood(g, 5, 0).omega)
    with pytest.raises(ValueError):
        offline_reduce(snaps, g, f, f, 2, other)


def test_all_modes_kept_has_no_excluded(toy):
    g, f, nb = toy
    b = offline_reduce(random_snapshots(g, f, nb, 2, 0, 0), g, f, f, 3)
    assert b.excluded is None


def test_boundary_node_constant_only():
    g = build_geometry(3, 3, 2)
    f = random_field(g, 0)
    b = local_basis(g, f, f, g.coarse_id(0, 1), "random", 5)
    assert b.size == 1 and np.all(b.modes == 1.0)
    assert constant_basis(g, neighborhood(g, 0, 0)).size == 1


def test_local_basis_modes():
    g = build_geometry(4, 4, 2)
    f = random_field(g, 1)
    for mode in ("full", "random", "skin"):
        b = local_basis(g, f, f, 6, mode, 3, 2, t=1)
        assert b.size == 4
    with pytest.raises(ValueError):
        local_basis(g, f, f, 6, "bogus", 3)


def test_dimension_count_reference_grid():
    # 81 interior nodes with k_nb + 1 modes, 40 boundary nodes with one
    g = build_geometry(10, 10, 10)
    f = CoefficientField.uniform(g)
    bases = reduce_all(g, f, RunConfig(k_nb=5), threads=4)
    assert sum(b.size for b in bases.values()) == 526
    rows = spectrum_rows(bases)
    assert len(rows) == 526 and rows[0][1] == 1


def test_threads_do_not_change_result():
    g = build_geometry(4, 4, 3)
    f = random_field(g, 2)
    cfg = RunConfig(coarse_nx=4, coarse_ny=4, fine_per_coarse=3, k_nb=3, p_bf=1, oversample_t=1)
    a = reduce_all(g, f, cfg, threads=1)
    b = reduce_all(g, f, cfg, threads=3)
    for i in a:
        assert np.array_equal(a[i].modes, b[i].modes)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(1, 6), st.integers(0, 4))
def test_eigenvalues_nonnegative_ascending(seed, k, p):
    g = build_geometry(4, 4, 2)
    f = random_field(g, seed, 1e4)
    b = local_basis(g, f, f, 12, "random", k, p, t=1, seed=seed)
    assert b.size == k + 1
    lam = b.all_eigenvalues
    assert np.all(np.diff(lam) >= -1e-9 * lam.max())
    assert lam[0] >= -1e-9 * lam.max()
