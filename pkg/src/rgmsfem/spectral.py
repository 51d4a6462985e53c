"""Local spectral reduction of a snapshot space.

For snapshot rows ``Psi`` on a neighborhood, solve the dense generalized
eigenproblem ``(Psi A Psi^T) theta = lam (Psi M Psi^T) theta`` and keep the
modes with the smallest eigenvalues.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .assembly import assemble_mass, assemble_stiffness
from .grid import neighborhood
from .snapshot import full_snapshots, random_snapshots, skin_snapshots

RANK_RTOL = 1e-12


@dataclass
class OfflineBasis:
    """Selected local modes for one coarse node.

    ``modes`` rows are fine-grid fields on ``nodes`` (the neighborhood), ordered by
    ascending ``eigenvalues``. ``excluded`` is the first eigenvalue not kept, or
    None when every mode was kept.
    """

    node: int
    eigenvalues: np.ndarray
    modes: np.ndarray
    nodes: np.ndarray
    excluded: float = None
    n_snapshots: int = 0
    full_count: int = 0
    all_eigenvalues: np.ndarray = None

    @property
    def size(self):
        return self.modes.shape[0]


def row_basis(Psi, rtol=RANK_RTOL):
    """Orthonormal rows spanning the numerical row space of ``Psi``.

    Singular values below ``rtol * sigma_max`` are discarded, so exactly or
    nearly dependent snapshots (the constant row is a sum of the Kronecker
    snapshots) do not produce spurious modes.
    """
    _, sv, Vt = np.linalg.svd(Psi, full_matrices=False)
    return Vt[sv > rtol * sv[0]]


def generalized_eigh(A, S):
    """Ascending eigenpairs of ``A x = lam S x`` with ``S``-orthonormal eigenvectors (columns)."""
    lam, theta = sla.eigh(0.5 * (A + A.T), 0.5 * (S + S.T))
    return lam, theta


def local_matrices(geom, field, weight_field, nodes_box):
    A = assemble_stiffness(geom, field, nodes_box)
    M = assemble_mass(geom, weight_field, nodes_box)
    return A, M


def offline_reduce(snapshots, geom, field, weight_field, m_off, matrices=None):
    """Reduce ``snapshots`` to its ``m_off`` lowest-energy modes.

    ``matrices`` may pass precomputed ``(A, M)`` operators on the snapshot nodes.
    """
    Psi = snapshots.rows
    if m_off > Psi.shape[0]:
        raise ValueError(f"m_off={m_off} exceeds snapshot count {Psi.shape[0]}")
    if matrices is None:
        box = geom.omega_box(snapshots.node)
        matrices = local_matrices(geom, field, weight_field, box)
    A, M = matrices
    if not np.array_equal(A.nodes, snapshots.nodes):
        raise ValueError("operator nodes do not match snapshot nodes")
    Q = row_basis(Psi)
    if m_off > Q.shape[0]:
        raise ValueError(f"snapshot space has numerical rank {Q.shape[0]} < m_off={m_off}")
    lam, theta = generalized_eigh(Q @ (A.matrix @ Q.T), Q @ (M.matrix @ Q.T))
    modes = theta[:, :m_off].T @ Q
    excluded = float(lam[m_off]) if m_off < len(lam) else None
    return OfflineBasis(snapshots.node, lam[:m_off].copy(), modes, snapshots.nodes,
                        excluded, snapshots.n_solves, all_eigenvalues=lam)


def constant_basis(geom, nbhd):
    """Single constant mode (value 1) used at coarse nodes on the domain boundary."""
    n = len(nbhd.omega_nodes)
    return OfflineBasis(nbhd.node, np.zeros(1), np.ones((1, n)), nbhd.omega_nodes.copy())


def local_basis(geom, field, weight_field, node, mode, k_nb, p_bf=4, t=3, seed=0,
                skin_inside=2, skin_outside=3):
    """Snapshot generation plus reduction for one coarse node.

    Interior nodes keep the constant and ``k_nb`` further modes; boundary nodes
    keep only the constant.
    """
    nbhd = neighborhood(geom, node, t, skin_inside, skin_outside)
    if not nbhd.interior:
        return constant_basis(geom, nbhd)
    if mode == "full":
        snaps = full_snapshots(geom, field, nbhd)
    elif mode == "random":
        snaps = random_snapshots(geom, field, nbhd, k_nb, p_bf, seed)
    elif mode == "skin":
        snaps = skin_snapshots(geom, field, nbhd, k_nb + p_bf)
    else:
        raise ValueError(f"unknown snapshot mode {mode!r}")
    basis = offline_reduce(snaps, geom, field, weight_field, min(k_nb + 1, snaps.n_rows))
    basis.full_count = nbhd.full_snapshot_count
    return basis


def reduce_all(geom, field, config, weight_field=None, threads=1):
    """Offline bases for every coarse node, keyed by node index.

    ``config`` needs ``snapshot_mode``, ``k_nb``, ``p_bf``, ``oversample_t`` and
    ``seed`` attributes (see :class:`rgmsfem.config.RunConfig`).
    """
    weight_field = field if weight_field is None else weight_field

    def work(i):
        return local_basis(geom, field, weight_field, i, config.snapshot_mode, config.k_nb,
                           config.p_bf, config.oversample_t, config.seed)

    nodes = range(geom.n_coarse_nodes)
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            bases = list(pool.map(work, nodes))
    else:
        bases = [work(i) for i in nodes]
    return dict(zip(nodes, bases))


def spectrum_rows(bases):
    """``(node, k, lambda_k)`` rows over all kept eigenvalues."""
    return [(i, k, float(lam)) for i, b in sorted(bases.items())
            for k, lam in enumerate(b.eigenvalues, start=1)]
