"""Bilinear (Q1) finite elements on the structured fine grid.

The coefficient is constant on each fine element, so the element integrals
below are exact.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Box

RTOL = 1e-10

# local node (ix, iy) offsets, counter-clockwise from lower-left
_LOC = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
_S1 = np.array([[1.0, -1.0], [-1.0, 1.0]])
_M1 = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])


class SolverError(RuntimeError):
    """A linear solve missed the residual tolerance."""


def element_stiffness(hx, hy):
    """4x4 Q1 stiffness of a ``hx`` by ``hy`` rectangle for unit coefficient."""
    xi, yi = _LOC[:, 0], _LOC[:, 1]
    return (hy / hx) * _S1[np.ix_(xi, xi)] * _M1[np.ix_(yi, yi)] \
        + (hx / hy) * _M1[np.ix_(xi, xi)] * _S1[np.ix_(yi, yi)]


def element_mass(hx, hy):
    xi, yi = _LOC[:, 0], _LOC[:, 1]
    return hx * hy * _M1[np.ix_(xi, xi)] * _M1[np.ix_(yi, yi)]


@dataclass
class SparseOperator:
    """Symmetric sparse matrix over the sorted global fine nodes ``nodes``."""

    matrix: sp.csr_matrix
    nodes: np.ndarray

    def local_index(self, global_nodes):
        idx = np.searchsorted(self.nodes, global_nodes)
        if np.any(idx >= len(self.nodes)) or np.any(self.nodes[np.minimum(idx, len(self.nodes) - 1)] != global_nodes):
            raise KeyError("node not in operator region")
        return idx

    def quad(self, u):
        """``u^T A u`` for local vectors (or rows of a 2-D array)."""
        u = np.asarray(u)
        if u.ndim == 1:
            return float(u @ (self.matrix @ u))
        return np.einsum("ij,ij->i", u, (self.matrix @ u.T).T)


def region_elements(geom, region):
    """Element ids for ``region``: None (whole grid), a :class:`Box`, or an id array."""
    if region is None:
        return np.arange(geom.n_elements)
    if isinstance(region, Box):
        return geom.box_elements(region)
    return np.asarray(region, dtype=int)


def _assemble(geom, weights, region, ke):
    elems = region_elements(geom, region)
    if elems.size == 0:
        raise ValueError("empty region")
    conn = geom.element_nodes[elems]
    nodes, local = np.unique(conn, return_inverse=True)
    local = local.reshape(conn.shape)
    w = np.asarray(weights, dtype=float)[elems]
    rows = np.repeat(local, 4, axis=1).ravel()
    cols = np.tile(local, (1, 4)).ravel()
    data = (w[:, None] * ke.ravel()[None, :]).ravel()
    n = len(nodes)
    mat = sp.csr_matrix((data, (rows, cols)), shape=(n, n))
    # exact symmetry; summation order can differ between (i,j) and (j,i)
    mat = ((mat + mat.T) * 0.5).tocsr()
    return SparseOperator(mat, nodes)


def _weights(field):
    return field.values if hasattr(field, "values") else field


def assemble_stiffness(geom, field, region=None):
    """Stiffness of ``a(u, v) = int kappa grad u . grad v`` over ``region``."""
    return _assemble(geom, _weights(field), region, element_stiffness(geom.hx, geom.hy))


def assemble_mass(geom, weight_field, region=None):
    """Weighted mass ``int w u v`` over ``region``."""
    return _assemble(geom, _weights(weight_field), region, element_mass(geom.hx, geom.hy))


class DirichletSolver:
    """Factorized operator with a fixed set of constrained nodes.

    Constrained rows and columns are eliminated, with the known values moved
    to the right-hand side. One factorization serves many boundary data sets.
    """

    def __init__(self, op, boundary_nodes, method="direct"):
        boundary_nodes = np.asarray(boundary_nodes)
        if boundary_nodes.size == 0:
            raise ValueError("at least one constrained node is required")
        self.op = op
        self.method = method
        self.bidx = op.local_index(np.sort(boundary_nodes))
        mask = np.ones(len(op.nodes), dtype=bool)
        mask[self.bidx] = False
        self.fidx = np.flatnonzero(mask)
        A = op.matrix
        self.Aff = A[self.fidx][:, self.fidx].tocsc()
        self.Afb = A[self.fidx][:, self.bidx].tocsc()
        self._lu = spla.splu(self.Aff) if (method == "direct" and self.fidx.size) else None

    @property
    def boundary_nodes(self):
        return self.op.nodes[self.bidx]

    def solve(self, boundary_values, rhs=None):
        """Solve for one (1-D) or several (columns of 2-D) boundary data sets.

        ``boundary_values`` are ordered like :attr:`boundary_nodes`; ``rhs`` is a
        load vector over all region nodes. Returns values on all region nodes.
        """
        g = np.asarray(boundary_values, dtype=float)
        single = g.ndim == 1
        g = g.reshape(len(self.bidx), -1)
        u = np.zeros((len(self.op.nodes), g.shape[1]))
        u[self.bidx] = g
        if self.fidx.size:
            b = -(self.Afb @ g)
            if rhs is not None:
                b += np.asarray(rhs, dtype=float).reshape(len(self.op.nodes), -1)[self.fidx]
            if self._lu is not None:
                x = self._lu.solve(b)
                # one refinement step recovers the residual lost to high contrast
                x += self._lu.solve(b - self.Aff @ x)
            else:
                x = np.column_stack([pcg(self.Aff, b[:, j]) for j in range(b.shape[1])])
            self._check(x, b)
            u[self.fidx] = x
        return u[:, 0] if single else u

    def _check(self, x, b):
        err = backward_error(self.Aff, x, b)
        if np.max(err) > RTOL:
            raise SolverError(f"relative residual {np.max(err):.3e} exceeds {RTOL:g}")


def backward_error(A, x, b):
    """Normwise relative residual ``|Ax - b| / (|A| |x| + |b|)`` in the infinity norm, per column."""
    x = x.reshape(x.shape[0], -1)
    b = b.reshape(b.shape[0], -1)
    r = np.abs(A @ x - b).max(axis=0)
    anorm = abs(A).sum(axis=1).max()
    scale = anorm * np.abs(x).max(axis=0) + np.abs(b).max(axis=0)
    return np.where(scale > 0, r / np.where(scale > 0, scale, 1.0), 0.0)


def pcg(A, b, rtol=RTOL, maxiter=None):
    """Jacobi-preconditioned conjugate gradients; raises :class:`SolverError` on the iteration cap."""
    n = b.size
    maxiter = 10 * n if maxiter is None else maxiter
    bnorm = np.linalg.norm(b)
    x = np.zeros(n)
    if bnorm == 0:
        return x
    dinv = 1.0 / A.diagonal()
    r = b.copy()
    z = dinv * r
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        Ap = A @ p
        alpha = rz / (p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if backward_error(A, x, b)[0] <= 0.1 * rtol:
            break
        z = dinv * r
        rz, rz_old = r @ z, rz
        p = z + (rz / rz_old) * p
    res = backward_error(A, x, b)[0]
    if res > rtol:
        raise SolverError(f"PCG stopped after {maxiter} iterations at relative residual {res:.3e}")
    return x


def solve_dirichlet(op, rhs, boundary_nodes, boundary_values, method="direct"):
    return DirichletSolver(op, boundary_nodes, method).solve(boundary_values, rhs)


def load_vector(geom, f, region=None):
    """Consistent load ``int f v`` for a scalar, nodal array, or callable ``f(x, y)``."""
    M = assemble_mass(geom, np.ones(geom.n_elements), region)
    if callable(f):
        xy = geom.node_coords[M.nodes]
        fv = f(xy[:, 0], xy[:, 1])
    else:
        fv = np.asarray(f, dtype=float)
        if fv.ndim:
            fv = fv[M.nodes]
    return M.matrix @ np.broadcast_to(fv, M.nodes.shape).astype(float)


def evaluate(g, x, y):
    """Values of a scalar or callable ``g(x, y)`` at the given points."""
    x = np.asarray(x, dtype=float)
    v = g(x, np.asarray(y, dtype=float)) if callable(g) else g
    return np.broadcast_to(np.asarray(v, dtype=float), x.shape).copy()


def boundary_function(g, geom, nodes):
    xy = geom.node_coords[nodes]
    return evaluate(g, xy[:, 0], xy[:, 1])


def fine_reference_solve(geom, field, f=0.0, g=0.0, method="direct"):
    """Fine-grid Q1 solution with ``u = g`` on the boundary of the unit square."""
    field.check(geom)
    A = assemble_stiffness(geom, field)
    F = load_vector(geom, f)
    bn = geom.boundary_nodes
    return solve_dirichlet(A, F, bn, boundary_function(g, geom, bn), method)
