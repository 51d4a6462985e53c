"""Partitions of unity on the coarse grid: bilinear hats and their kappa-harmonic versions."""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly import DirichletSolver, assemble_stiffness
from .field import CoefficientField


@dataclass
class PartitionOfUnity:
    """``chi`` is a sparse ``(n_coarse_nodes, n_fine_nodes)`` matrix; row ``i`` is chi_i."""

    chi: sp.csr_matrix
    mode: str

    def __getitem__(self, i):
        return self.chi.getrow(i).toarray().ravel()

    def on_nodes(self, i, nodes):
        return self.chi[i, nodes].toarray().ravel()


def _hat(geom, i, nodes):
    X, Y = geom.coarse_coords(i)
    xy = geom.node_coords[nodes]
    hx = np.clip(1 - np.abs(xy[:, 0] - X) * geom.coarse_nx, 0, None)
    hy = np.clip(1 - np.abs(xy[:, 1] - Y) * geom.coarse_ny, 0, None)
    return hx * hy


def _from_columns(geom, columns):
    rows, cols, vals = [], [], []
    for i, (nodes, v) in enumerate(columns):
        keep = v != 0
        rows.append(np.full(keep.sum(), i))
        cols.append(nodes[keep])
        vals.append(v[keep])
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(geom.n_coarse_nodes, geom.n_nodes))


def build_standard_pou(geom):
    cols = []
    for i in range(geom.n_coarse_nodes):
        nodes = geom.box_nodes(geom.omega_box(i))
        cols.append((nodes, _hat(geom, i, nodes)))
    return PartitionOfUnity(_from_columns(geom, cols), "standard")


def block_harmonic_extension(geom, field, bx, by):
    """Solve ``div(kappa grad chi) = 0`` in one coarse block for its four corner hats.

    Returns ``(nodes, values, corners)``; ``values`` has shape ``(4, len(nodes))``
    with rows ordered like ``corners`` (lower-left, lower-right, upper-right, upper-left).
    """
    box = geom.coarse_block(bx, by)
    op = assemble_stiffness(geom, field, box)
    solver = DirichletSolver(op, geom.box_boundary_nodes(box))
    corners = [geom.coarse_id(bx + dx, by + dy) for dx, dy in ((0, 0), (1, 0), (1, 1), (0, 1))]
    data = np.column_stack([_hat(geom, c, solver.boundary_nodes) for c in corners])
    return op.nodes, solver.solve(data).T, corners


def build_multiscale_pou(geom, field):
    field.check(geom)
    acc = {}
    for by in range(geom.coarse_ny):
        for bx in range(geom.coarse_nx):
            nodes, vals, corners = block_harmonic_extension(geom, field, bx, by)
            for c, v in zip(corners, vals):
                acc.setdefault(c, []).append((nodes, v))
    cols = []
    for i in range(geom.n_coarse_nodes):
        nodes = np.concatenate([n for n, _ in acc[i]])
        vals = np.concatenate([v for _, v in acc[i]])
        # shared block edges carry identical (bilinear) data
        nodes, first = np.unique(nodes, return_index=True)
        cols.append((nodes, vals[first]))
    return PartitionOfUnity(_from_columns(geom, cols), "multiscale")


def build_pou(geom, field, mode="multiscale"):
    if mode == "multiscale":
        return build_multiscale_pou(geom, field)
    if mode == "standard":
        return build_standard_pou(geom)
    raise ValueError(f"unknown partition of unity mode {mode!r}")


def center_gradients(geom, nodal):
    """Gradient of Q1 fields at fine element centers.

    ``nodal`` is ``(n_fine_nodes,)`` or a sparse/dense ``(k, n_fine_nodes)`` array;
    returns ``(gx, gy)`` each of shape ``(k, n_elements)`` (or flat).
    """
    en = geom.element_nodes
    if nodal.ndim == 1:
        u = [nodal[en[:, j]] for j in range(4)]
    else:
        u = [nodal[:, en[:, j]] for j in range(4)]
    gx = (u[1] - u[0] + u[2] - u[3]) * (0.5 / geom.hx)
    gy = (u[3] - u[0] + u[2] - u[1]) * (0.5 / geom.hy)
    return gx, gy


def weighted_kappa(geom, field, pou):
    """``kappa * sum_i |grad chi_i|^2`` per fine element, gradients at element centers."""
    gx, gy = center_gradients(geom, pou.chi.tocsc())
    s = np.asarray(gx.multiply(gx).sum(axis=0) + gy.multiply(gy).sum(axis=0)).ravel()
    return CoefficientField(field.values * s, field.nx, field.ny)


def mass_weight(geom, field, pou=None, mode="kappa"):
    """Weight for the snapshot mass matrix: ``kappa`` itself or the PoU-weighted variant."""
    if mode == "kappa":
        return field
    if mode == "pou_weighted":
        if pou is None:
            raise ValueError("pou_weighted mass needs a partition of unity")
        return weighted_kappa(geom, field, pou)
    raise ValueError(f"unknown kappa_tilde mode {mode!r}")
