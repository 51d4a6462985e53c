"""Residual indicators and randomized local enrichment.

The indicator of an interior coarse node is the dual norm of the fine-scale
residual over its neighborhood, divided by the first eigenvalue left out of
the local offline space. Marked nodes receive a few extra modes built from
new random snapshots.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .assembly import DirichletSolver, assemble_stiffness
from .coarse import GlobalOperators
from .grid import neighborhood
from .pipeline import coarse_from_bases, setup
from .snapshot import random_snapshots
from .spectral import OfflineBasis, generalized_eigh, local_matrices, reduce_all, row_basis

log = logging.getLogger(__name__)

SATURATION_RTOL = 1e-6


class EnrichmentSaturated(ValueError):
    """New snapshots add fewer independent directions than requested."""


@dataclass
class IndicatorReport:
    """Per interior node: dual residual norm, excluded eigenvalue and ``eta^2``."""

    nodes: np.ndarray
    residual_norms: np.ndarray
    excluded: np.ndarray
    eta2: np.ndarray
    marked: np.ndarray = dc_field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def total(self):
        return float(self.eta2.sum())


def local_residual_norm(geom, field, nbhd, residual):
    """Dual norm over ``H^1_0(omega_i)`` of a global residual vector (load minus ``A u_H``).

    Test functions vanish on the neighborhood boundary, so only the residual at
    interior nodes enters; the Riesz representative solves the local problem
    with zero Dirichlet data.
    """
    op = assemble_stiffness(geom, field, nbhd.omega)
    solver = DirichletSolver(op, nbhd.omega_boundary)
    rhs = np.zeros(len(op.nodes))
    rhs[solver.fidx] = residual[op.nodes[solver.fidx]]
    z = solver.solve(np.zeros(len(solver.bidx)), rhs)
    return float(np.sqrt(max(op.quad(z), 0.0)))


def residual_indicators(geom, field, space, u_H, f, bases, ops=None, threads=1):
    """Indicators ``eta_i^2 = |R_i|^2 / lambda_excluded`` for all interior coarse nodes."""
    ops = ops if ops is not None else GlobalOperators(geom, field, f)
    residual = ops.F - ops.A @ u_H
    nodes = geom.interior_coarse_nodes
    for i in nodes:
        if bases[i].excluded is None:
            raise ValueError(f"node {i} kept every mode; no excluded eigenvalue for its indicator")

    def work(i):
        return local_residual_norm(geom, field, neighborhood(geom, i, 0), residual)

    norms = np.array(_map(work, nodes, threads))
    lam = np.array([bases[i].excluded for i in nodes])
    return IndicatorReport(np.asarray(nodes), norms, lam, norms ** 2 / lam)


def mark(report, theta=0.3):
    """Smallest node set carrying at least ``theta`` of the summed ``eta^2`` (bulk marking).

    Nodes are taken by decreasing ``eta^2``, ties by node index. Returns sorted
    node ids.
    """
    if not 0 < theta <= 1:
        raise ValueError("theta must lie in (0, 1]")
    eta2 = np.asarray(report.eta2, dtype=float)
    nodes = np.asarray(report.nodes)
    total = eta2.sum()
    if total <= 0:
        return np.zeros(0, dtype=int)
    order = np.lexsort((nodes, -eta2))
    csum = np.cumsum(eta2[order])
    # relative slack so that exact fractions like 25/81 >= 0.3 are not lost to rounding
    n = int(np.searchsorted(csum, theta * total * (1 - 1e-12))) + 1
    n = min(n, int(np.count_nonzero(eta2 > 0)))
    return np.sort(nodes[order[:n]])


def project_out(rows, modes, M):
    """Remove the ``M``-weighted components along each of ``modes`` (two passes).

    ``modes`` must be mutually ``M``-orthogonal, as offline modes are.
    """
    rows = np.array(rows, dtype=float)
    MP = (M @ modes.T).T
    norms = np.einsum("ij,ij->i", modes, MP)
    for _ in range(2):
        coef = (rows @ MP.T) / norms
        rows -= coef @ modes
    return rows


def enrich(geom, field, nbhd, basis, c_nb, c_bf, seed, weight_field=None, stream=(1,)):
    """Append ``c_nb`` modes from ``c_nb + c_bf`` new random snapshots.

    The new snapshots lose their components along the existing non-constant
    modes, then a spectral decomposition of the projected rows picks the modes
    to append. The constant (mode 0) is left out of the projection and kept
    once, but the selection only looks at the part of the projected rows that
    is ``M``-orthogonal to constants: otherwise the leftover constant
    component has eigenvalue zero, gets picked first and duplicates mode 0.
    The new excluded eigenvalue is the first one not kept in the eigenproblem
    over the enlarged span (old modes plus projected snapshots).
    """
    if c_nb < 1:
        raise ValueError("c_nb must be >= 1")
    weight_field = field if weight_field is None else weight_field
    snaps = random_snapshots(geom, field, nbhd, c_nb, c_bf, seed, stream=stream)
    if not np.array_equal(snaps.nodes, basis.nodes):
        raise ValueError("basis and snapshot nodes differ")
    A, M = local_matrices(geom, field, weight_field, nbhd.omega)
    old = basis.modes[1:]
    rows = project_out(snaps.rows[1:], old, M.matrix) if old.shape[0] else snaps.rows[1:]
    free = project_out(rows, np.ones((1, rows.shape[1])), M.matrix)
    # rank is judged against the raw snapshots, not the (possibly tiny) residual rows
    _, sv, Vt = np.linalg.svd(free, full_matrices=False)
    Q = Vt[sv > SATURATION_RTOL * np.linalg.norm(snaps.rows[1:], 2)]
    if Q.shape[0] < c_nb:
        raise EnrichmentSaturated(f"node {basis.node}: {Q.shape[0]} independent directions < c_nb={c_nb}")
    lam, theta = generalized_eigh(Q @ (A.matrix @ Q.T), Q @ (M.matrix @ Q.T))
    new = theta[:, :c_nb].T @ Q
    modes = np.vstack([basis.modes, new])
    eig = np.concatenate([basis.eigenvalues, lam[:c_nb]])

    # eigenvalues of the enlarged span decide the next excluded value
    Qe = row_basis(np.vstack([basis.modes, rows]))
    lam_e, _ = generalized_eigh(Qe @ (A.matrix @ Qe.T), Qe @ (M.matrix @ Qe.T))
    if modes.shape[0] < len(lam_e):
        excluded = float(lam_e[modes.shape[0]])
    else:
        excluded = basis.excluded
        log.info("node %d: no excluded eigenvalue after enrichment, keeping %g", basis.node, excluded)
    return OfflineBasis(basis.node, eig, modes, basis.nodes, excluded,
                        basis.n_snapshots + snaps.n_solves, basis.full_count, lam_e)


@dataclass
class AdaptiveRow:
    iteration: int
    dim: int
    marked_count: int
    l2: float
    h1: float
    sum_eta2: float


def adaptive_loop(config, problem=None, threads=1, callback=None):
    """Solve, estimate, mark and enrich until ``max_iter`` or ``target_err`` (percent, energy).

    Starts from ``config.k_nb`` random-snapshot modes per interior node. Returns
    one :class:`AdaptiveRow` per coarse solve; the last row marks nothing.
    """
    problem = setup(config) if problem is None else problem
    geom, fld = problem.geom, problem.field
    bases = reduce_all(geom, fld, config, problem.weight, threads)
    rows = []
    saturated = set()
    for it in range(config.max_iter + 1):
        run = coarse_from_bases(problem, bases)
        rep = run.report
        indicators = residual_indicators(geom, fld, run.space, run.solution.u_H, problem.f,
                                         bases, problem.ops, threads)
        done = it == config.max_iter or (config.target_err > 0 and rep.h1 <= config.target_err)
        marked = np.zeros(0, dtype=int) if done else mark(_without(indicators, saturated), config.theta)
        indicators.marked = marked
        rows.append(AdaptiveRow(it, run.space.dim, len(marked), rep.l2, rep.h1, indicators.total))
        if callback is not None:
            callback(rows[-1], run, indicators)
        if done or not len(marked):
            break

        def work(i):
            nb = neighborhood(geom, i, config.oversample_t)
            try:
                return enrich(geom, fld, nb, bases[i], config.c_nb, config.c_bf, config.seed,
                              problem.weight, stream=(1, it))
            except EnrichmentSaturated as exc:
                log.info("%s; node left unchanged and no longer marked", exc)
                return None

        for i, b in zip(marked, _map(work, marked, threads)):
            if b is None:
                saturated.add(int(i))
            else:
                bases[int(i)] = b
    return rows


def _without(report, nodes):
    """Copy of ``report`` with ``nodes`` removed (saturated nodes cannot be enriched)."""
    keep = ~np.isin(report.nodes, list(nodes))
    return IndicatorReport(report.nodes[keep], report.residual_norms[keep], report.excluded[keep],
                           report.eta2[keep])


def _map(fn, items, threads):
    items = list(items)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(i) for i in items]
