"""Local snapshot spaces: full harmonic, randomized boundary data, and skin-layer modes.

Every snapshot set stores its rows on the fine nodes of the target
neighborhood, with the constant function as row 0.
"""
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg as sla

from .assembly import DirichletSolver, assemble_mass, assemble_stiffness

HARMONIC_TOL = 1e-9


@dataclass
class SnapshotSet:
    """Snapshot rows for one neighborhood.

    Attributes
    ----------
    rows : ndarray, shape (n_rows, n_omega_nodes)
        Row 0 is the constant function; the rest are local solutions.
    nodes : ndarray
        Global fine nodes of the target region, matching the columns.
    n_solves : int
        Local problems solved to produce the set.
    """

    node: int
    mode: str
    rows: np.ndarray
    nodes: np.ndarray
    n_solves: int
    seed: int = None
    k_nb: int = None
    p_bf: int = None
    extra: dict = dc_field(default_factory=dict)

    @property
    def n_rows(self):
        return self.rows.shape[0]

    def save(self, path):
        """Plain-text dump: one row per line, first line lists the global node ids."""
        with open(path, "w") as fh:
            fh.write(" ".join(str(int(n)) for n in self.nodes) + "\n")
            np.savetxt(fh, self.rows, fmt="%.17g")


def neighborhood_rng(seed, node, *stream):
    """Independent generator per (seed, neighborhood[, stream]) so results ignore scheduling."""
    return np.random.default_rng([int(seed), int(node), *map(int, stream)])


class OversampledProblem:
    """Factorized ``-div(kappa grad u) = 0`` on the oversampled region.

    Data nodes are the perimeter nodes off the domain boundary; perimeter
    nodes on the domain boundary are held at zero.
    """

    def __init__(self, geom, field, nbhd):
        self.nbhd = nbhd
        self.op = assemble_stiffness(geom, field, nbhd.omega_plus)
        self.solver = DirichletSolver(self.op, nbhd.plus_boundary)
        bn = self.solver.boundary_nodes
        self.data_pos = np.searchsorted(bn, nbhd.plus_boundary_nodes)
        self.restrict = self.op.local_index(nbhd.omega_nodes)

    @property
    def n_data(self):
        return len(self.data_pos)

    def solve(self, data):
        """Harmonic extensions of ``data``, shape ``(n_data, k)``; one column per solve."""
        if self.n_data == 0:
            raise ValueError(f"node {self.nbhd.node}: oversampled region covers the domain, no data nodes")
        data = np.asarray(data, dtype=float).reshape(self.n_data, -1)
        g = np.zeros((len(self.solver.bidx), data.shape[1]))
        g[self.data_pos] = data
        return self.solver.solve(g)

    def interior_residual(self, u):
        """Max relative residual of the interior equations for columns of ``u``."""
        A = self.op.matrix
        r = (A @ u)[self.solver.fidx]
        scale = np.abs(A).max() * np.max(np.abs(u), axis=0)
        return float(np.max(np.max(np.abs(r), axis=0) / np.maximum(scale, 1e-300)))

    def restricted(self, u):
        return u[self.restrict].T


def _with_constant(rows, n):
    return np.vstack([np.ones((1, n)), rows])


def full_snapshots(geom, field, nbhd):
    """One harmonic solve per data node of the oversampled perimeter (Kronecker data)."""
    prob = OversampledProblem(geom, field, nbhd)
    u = prob.solve(np.eye(prob.n_data))
    rows = prob.restricted(u)
    return SnapshotSet(nbhd.node, "full", _with_constant(rows, rows.shape[1]),
                       nbhd.omega_nodes.copy(), prob.n_data,
                       extra={"residual": prob.interior_residual(u)})


def random_boundary_data(rng, n_rows, n_data):
    return rng.standard_normal((n_rows, n_data))


def random_snapshots(geom, field, nbhd, k_nb, p_bf, seed, stream=(), problem=None):
    """``k_nb + p_bf`` harmonic solves with i.i.d. standard normal perimeter data.

    ``stream`` selects an independent draw for the same neighborhood (used by
    enrichment). Rows of the result are ``[constant, random...]``.
    """
    if k_nb < 1 or p_bf < 0:
        raise ValueError("need k_nb >= 1 and p_bf >= 0")
    prob = problem if problem is not None else OversampledProblem(geom, field, nbhd)
    R = random_boundary_data(neighborhood_rng(seed, nbhd.node, *stream), k_nb + p_bf, prob.n_data)
    u = prob.solve(R.T)
    rows = prob.restricted(u)
    return SnapshotSet(nbhd.node, "random", _with_constant(rows, rows.shape[1]),
                       nbhd.omega_nodes.copy(), k_nb + p_bf, seed=seed, k_nb=k_nb, p_bf=p_bf,
                       extra={"R": R, "residual": prob.interior_residual(u)})


def skin_modes(geom, field, nbhd, count, weight_field=None):
    """Smallest ``count + 1`` eigenpairs of stiffness vs. mass on the skin layer.

    Returns ``(eigenvalues, vectors, nodes)`` with eigenvectors as rows; the first
    pair is the constant mode of the (connected) layer.
    """
    elems = nbhd.skin_elements
    K = assemble_stiffness(geom, field, elems)
    M = assemble_mass(geom, field if weight_field is None else weight_field, elems)
    n = len(K.nodes)
    hi = min(count, n - 1)
    lam, vec = sla.eigh(K.matrix.toarray(), M.matrix.toarray(), subset_by_index=[0, hi])
    return lam, vec.T, K.nodes


def skin_snapshots(geom, field, nbhd, count, weight_field=None):
    """Boundary modes from the skin-layer eigenproblem, extended harmonically into the neighborhood.

    The constant layer mode is skipped (it is the explicit constant row), so the
    set has ``count + 1`` rows and costs ``count`` extension solves.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if nbhd.skin_elements.size == 0:
        raise ValueError("empty skin layer")
    lam, vec, snodes = skin_modes(geom, field, nbhd, count, weight_field)
    vec = vec[1:count + 1]
    op = assemble_stiffness(geom, field, nbhd.omega)
    solver = DirichletSolver(op, nbhd.omega_boundary)
    bn = solver.boundary_nodes
    data = np.zeros((len(bn), vec.shape[0]))
    dpos = np.searchsorted(bn, nbhd.omega_boundary_nodes)
    data[dpos] = vec[:, np.searchsorted(snodes, nbhd.omega_boundary_nodes)].T
    u = solver.solve(data)
    rows = u.T
    return SnapshotSet(nbhd.node, "skin", _with_constant(rows, rows.shape[1]),
                       op.nodes.copy(), vec.shape[0],
                       extra={"skin_eigenvalues": lam})
