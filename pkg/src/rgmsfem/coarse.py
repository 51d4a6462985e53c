"""Global coarse space ``phi = chi_i * psi_k``, Galerkin solve, and error norms."""
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .assembly import assemble_mass, assemble_stiffness, evaluate, load_vector

log = logging.getLogger(__name__)

# relative eigenvalue cutoff for the rank-revealing fallback solve
RANK_RTOL = 1e-12


class SingularCoarseError(RuntimeError):
    """The coarse Galerkin matrix is not positive definite (rank-deficient basis)."""


@dataclass
class CoarseSpace:
    """Multiscale basis as rows of the sparse ``Phi`` (n_dofs x n_fine_nodes).

    Dofs are ordered by coarse node, then by local mode. ``constrained`` marks the
    constant modes of boundary coarse nodes, whose coefficients carry the
    Dirichlet data.
    """

    Phi: sp.csr_matrix
    dof_node: np.ndarray
    dof_mode: np.ndarray
    constrained: np.ndarray

    @property
    def dim(self):
        return self.Phi.shape[0]

    @property
    def constrained_nodes(self):
        return self.dof_node[self.constrained]


@dataclass
class ErrorReport:
    l2: float
    h1: float
    dim: int
    ratio: float


@dataclass
class CoarseSolution:
    """``dropped`` counts directions discarded by the rank-revealing fallback (0 after Cholesky)."""

    coefficients: np.ndarray
    u_H: np.ndarray
    space: CoarseSpace
    dropped: int = 0


def build_coarse_space(geom, pou, bases):
    """Multiply each local mode by its partition-of-unity function."""
    rows, cols, vals = [], [], []
    dof_node, dof_mode, constrained = [], [], []
    dof = 0
    for i in range(geom.n_coarse_nodes):
        if i not in bases:
            raise KeyError(f"no offline basis for coarse node {i}")
        b = bases[i]
        chi = pou.on_nodes(i, b.nodes)
        support = np.flatnonzero(chi)
        boundary = not geom.is_interior(i)
        for k, mode in enumerate(b.modes):
            v = chi[support] * mode[support]
            rows.append(np.full(len(support), dof))
            cols.append(b.nodes[support])
            vals.append(v)
            dof_node.append(i)
            dof_mode.append(k)
            constrained.append(boundary and k == 0)
            dof += 1
    Phi = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(dof, geom.n_nodes))
    return CoarseSpace(Phi, np.array(dof_node), np.array(dof_mode), np.array(constrained))


class GlobalOperators:
    """Fine-grid stiffness, kappa-mass and load reused across coarse solves."""

    def __init__(self, geom, field, f=0.0):
        self.geom = geom
        self.A = assemble_stiffness(geom, field).matrix
        self.M = assemble_mass(geom, field).matrix
        self.F = load_vector(geom, f)


def solve_coarse(space, geom, field, f=0.0, g=0.0, ops=None, strict=False):
    """Galerkin solve in the coarse space; boundary constant modes are fixed to ``g(x_i)``.

    The diagonally scaled matrix is factored by Cholesky. Many local modes or
    very high contrast can make the functions ``chi_i psi_k`` numerically
    dependent; the Galerkin solution in their span is still unique, so unless
    ``strict`` is set the solve falls back to a truncated eigendecomposition.
    Raises :class:`SingularCoarseError` in strict mode, or when the matrix is
    indefinite beyond round-off.
    """
    ops = ops if ops is not None else GlobalOperators(geom, field, f)
    Phi = space.Phi
    Ac = (Phi @ ops.A @ Phi.T).toarray()
    b = Phi @ ops.F
    con = space.constrained
    c = np.zeros(space.dim)
    xy = np.array([geom.coarse_coords(i) for i in space.constrained_nodes]).reshape(-1, 2)
    c[con] = evaluate(g, xy[:, 0], xy[:, 1])
    free = ~con
    rhs = b[free] - Ac[np.ix_(free, con)] @ c[con]
    Aff = Ac[np.ix_(free, free)]
    d = np.sqrt(np.diag(Aff))
    if np.any(d <= 0):
        raise SingularCoarseError("coarse basis function with zero energy")
    As = Aff / np.outer(d, d)
    dropped = 0
    try:
        factor = sla.cho_factor(As, lower=True)
        # As has unit diagonal, so a tiny pivot means a numerically dependent basis
        if np.min(np.diag(factor[0])) ** 2 < RANK_RTOL:
            raise np.linalg.LinAlgError("coarse matrix is numerically singular")
        y = sla.cho_solve(factor, rhs / d)
    except np.linalg.LinAlgError as exc:
        if strict:
            raise SingularCoarseError(str(exc)) from None
        y, dropped = _truncated_solve(As, rhs / d)
        log.info("coarse matrix numerically singular; dropped %d of %d directions", dropped, len(d))
    c[free] = y / d
    return CoarseSolution(c, Phi.T @ c, space, dropped)


def _truncated_solve(As, b):
    lam, V = sla.eigh(As)
    top = lam[-1]
    if lam[0] < -1e-8 * top:
        raise SingularCoarseError(f"coarse matrix is indefinite (eigenvalue {lam[0]:.3e})")
    keep = lam > RANK_RTOL * top
    y = V[:, keep] @ ((V[:, keep].T @ b) / lam[keep])
    return y, int(np.count_nonzero(~keep))


def energy_norm(A, u):
    return float(np.sqrt(max(u @ (A @ u), 0.0)))


def snapshot_ratio(bases):
    """Mean percentage of full snapshots computed, over interior nodes with unclipped oversampling."""
    rows = [b for b in bases.values() if b.full_count]
    if not rows:
        return 0.0
    top = max(b.full_count for b in rows)
    rows = [b for b in rows if b.full_count == top]
    return 100.0 * float(np.mean([b.n_snapshots / b.full_count for b in rows]))


def error_report(u_fine, u_H, geom, field, space=None, bases=None, ops=None):
    """Relative weighted-L2 and energy errors in percent."""
    if ops is None:
        A = assemble_stiffness(geom, field).matrix
        M = assemble_mass(geom, field).matrix
    else:
        A, M = ops.A, ops.M
    e = u_fine - u_H
    n_l2, n_h1 = energy_norm(M, u_fine), energy_norm(A, u_fine)
    if n_l2 == 0 or n_h1 == 0:
        raise ValueError("reference solution has zero norm")
    return ErrorReport(100 * energy_norm(M, e) / n_l2, 100 * energy_norm(A, e) / n_h1,
                       space.dim if space is not None else 0,
                       snapshot_ratio(bases) if bases is not None else 0.0)
