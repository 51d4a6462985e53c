"""Structured fine/coarse grids on the unit square and the index sets built on them.

Conventions
-----------
Fine nodes are numbered row-major, bottom row first, x fastest:
``node = iy * (nx + 1) + ix``. Fine elements use the same layout,
``elem = ey * nx + ex``, and coarse nodes ``I + J * (coarse_nx + 1)``.
Rectangular regions are half-open element ranges ``[x0, x1) x [y0, y1)``.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class Box:
    """Rectangle of fine elements, ``[x0, x1) x [y0, y1)`` in element indices."""

    x0: int
    x1: int
    y0: int
    y1: int

    @property
    def shape(self):
        return (self.x1 - self.x0, self.y1 - self.y0)

    @property
    def empty(self):
        return self.x1 <= self.x0 or self.y1 <= self.y0

    def grow(self, t, clip=None):
        """Extend by ``t`` element layers on every side, optionally clipped to ``clip``."""
        b = Box(self.x0 - t, self.x1 + t, self.y0 - t, self.y1 + t)
        return b.intersect(clip) if clip is not None else b

    def intersect(self, other):
        return Box(max(self.x0, other.x0), min(self.x1, other.x1),
                   max(self.y0, other.y0), min(self.y1, other.y1))

    def contains(self, other):
        return (self.x0 <= other.x0 and self.y0 <= other.y0
                and self.x1 >= other.x1 and self.y1 >= other.y1)


@dataclass(frozen=True)
class GridGeometry:
    """Nested structured grids on the unit square.

    Parameters
    ----------
    coarse_nx, coarse_ny : int
        Coarse blocks per axis.
    fine_per_coarse : int
        Fine elements per coarse block edge.
    """

    coarse_nx: int
    coarse_ny: int
    fine_per_coarse: int

    def __post_init__(self):
        for name in ("coarse_nx", "coarse_ny", "fine_per_coarse"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")

    # ---- sizes -----------------------------------------------------------
    @property
    def nx(self):
        return self.coarse_nx * self.fine_per_coarse

    @property
    def ny(self):
        return self.coarse_ny * self.fine_per_coarse

    @property
    def hx(self):
        return 1.0 / self.nx

    @property
    def hy(self):
        return 1.0 / self.ny

    @property
    def n_nodes(self):
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_elements(self):
        return self.nx * self.ny

    @property
    def n_coarse_nodes(self):
        return (self.coarse_nx + 1) * (self.coarse_ny + 1)

    @property
    def domain(self):
        return Box(0, self.nx, 0, self.ny)

    # ---- fine grid -------------------------------------------------------
    def node_id(self, ix, iy):
        return np.asarray(iy) * (self.nx + 1) + np.asarray(ix)

    def node_ij(self, node):
        node = np.asarray(node)
        return node % (self.nx + 1), node // (self.nx + 1)

    @cached_property
    def node_coords(self):
        """``(n_nodes, 2)`` array of fine node coordinates."""
        ix, iy = self.node_ij(np.arange(self.n_nodes))
        return np.column_stack([ix * self.hx, iy * self.hy])

    @cached_property
    def element_nodes(self):
        """``(n_elements, 4)`` connectivity, counter-clockwise from the lower-left corner."""
        ex, ey = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        ex, ey = ex.ravel(), ey.ravel()
        n0 = self.node_id(ex, ey)
        return np.column_stack([n0, n0 + 1, n0 + self.nx + 2, n0 + self.nx + 1])

    @cached_property
    def boundary_nodes(self):
        """Fine nodes on the boundary of the unit square."""
        ix, iy = self.node_ij(np.arange(self.n_nodes))
        on = (ix == 0) | (iy == 0) | (ix == self.nx) | (iy == self.ny)
        return np.flatnonzero(on)

    def box_elements(self, box):
        ex, ey = np.meshgrid(np.arange(box.x0, box.x1), np.arange(box.y0, box.y1))
        return np.sort(self.element_id(ex.ravel(), ey.ravel()))

    def element_id(self, ex, ey):
        return np.asarray(ey) * self.nx + np.asarray(ex)

    def box_nodes(self, box):
        ix, iy = np.meshgrid(np.arange(box.x0, box.x1 + 1), np.arange(box.y0, box.y1 + 1))
        return np.sort(self.node_id(ix.ravel(), iy.ravel()))

    def box_boundary_nodes(self, box):
        """Nodes on the perimeter of ``box``."""
        nodes = self.box_nodes(box)
        ix, iy = self.node_ij(nodes)
        on = (ix == box.x0) | (ix == box.x1) | (iy == box.y0) | (iy == box.y1)
        return nodes[on]

    def on_domain_boundary(self, nodes):
        ix, iy = self.node_ij(nodes)
        return (ix == 0) | (iy == 0) | (ix == self.nx) | (iy == self.ny)

    # ---- coarse grid -----------------------------------------------------
    def coarse_ij(self, i):
        if not 0 <= i < self.n_coarse_nodes:
            raise IndexError(f"coarse node {i} out of range [0, {self.n_coarse_nodes})")
        return i % (self.coarse_nx + 1), i // (self.coarse_nx + 1)

    def coarse_id(self, I, J):
        return J * (self.coarse_nx + 1) + I

    def is_interior(self, i):
        I, J = self.coarse_ij(i)
        return 0 < I < self.coarse_nx and 0 < J < self.coarse_ny

    @property
    def interior_coarse_nodes(self):
        return [i for i in range(self.n_coarse_nodes) if self.is_interior(i)]

    def coarse_coords(self, i):
        I, J = self.coarse_ij(i)
        return I / self.coarse_nx, J / self.coarse_ny

    def coarse_fine_node(self, i):
        I, J = self.coarse_ij(i)
        return int(self.node_id(I * self.fine_per_coarse, J * self.fine_per_coarse))

    def coarse_block(self, bx, by):
        n = self.fine_per_coarse
        return Box(bx * n, (bx + 1) * n, by * n, (by + 1) * n)

    @cached_property
    def element_block(self):
        """Coarse block index ``bx + by * coarse_nx`` of every fine element."""
        ex, ey = np.meshgrid(np.arange(self.nx), np.arange(self.ny))
        n = self.fine_per_coarse
        return ((ey // n) * self.coarse_nx + ex // n).ravel()

    def omega_box(self, i):
        """Coarse neighborhood of node ``i``: union of coarse blocks touching it."""
        I, J = self.coarse_ij(i)
        n = self.fine_per_coarse
        return Box(max(I - 1, 0) * n, min(I + 1, self.coarse_nx) * n,
                   max(J - 1, 0) * n, min(J + 1, self.coarse_ny) * n)


def build_geometry(coarse_nx, coarse_ny, fine_per_coarse):
    return GridGeometry(coarse_nx, coarse_ny, fine_per_coarse)


@dataclass(frozen=True)
class Neighborhood:
    """Index sets attached to one coarse node.

    Attributes
    ----------
    node : int
        Coarse node index.
    interior : bool
        Whether the coarse node is away from the domain boundary.
    omega, omega_plus : Box
        Target region and its oversampled extension (clipped to the domain).
    t : int
        Oversampling width in fine layers.
    """

    geom: GridGeometry
    node: int
    interior: bool
    omega: Box
    omega_plus: Box
    t: int
    skin_inside: int = 2
    skin_outside: int = 3

    @cached_property
    def omega_nodes(self):
        return self.geom.box_nodes(self.omega)

    @cached_property
    def omega_elements(self):
        return self.geom.box_elements(self.omega)

    @cached_property
    def plus_nodes(self):
        return self.geom.box_nodes(self.omega_plus)

    @cached_property
    def plus_elements(self):
        return self.geom.box_elements(self.omega_plus)

    @cached_property
    def plus_boundary(self):
        """All perimeter nodes of the oversampled region."""
        return self.geom.box_boundary_nodes(self.omega_plus)

    @cached_property
    def plus_boundary_nodes(self):
        """Perimeter nodes of the oversampled region that do not lie on the domain boundary.

        These carry the snapshot boundary data; the rest of the perimeter is held at zero.
        """
        b = self.plus_boundary
        return b[~self.geom.on_domain_boundary(b)]

    @cached_property
    def omega_boundary(self):
        return self.geom.box_boundary_nodes(self.omega)

    @cached_property
    def omega_boundary_nodes(self):
        b = self.omega_boundary
        return b[~self.geom.on_domain_boundary(b)]

    @cached_property
    def skin_elements(self):
        """Fine elements of the layer straddling the interior part of the neighborhood boundary."""
        geom = self.geom
        outer = self.omega.grow(self.skin_outside, geom.domain)
        w = self.skin_inside
        dom = geom.domain
        # sides lying on the domain boundary are not shrunk
        inner = Box(self.omega.x0 + (w if self.omega.x0 > dom.x0 else 0),
                    self.omega.x1 - (w if self.omega.x1 < dom.x1 else 0),
                    self.omega.y0 + (w if self.omega.y0 > dom.y0 else 0),
                    self.omega.y1 - (w if self.omega.y1 < dom.y1 else 0))
        elems = geom.box_elements(outer)
        if inner.empty:
            return elems
        return np.setdiff1d(elems, geom.box_elements(inner))

    @cached_property
    def skin_nodes(self):
        return np.unique(self.geom.element_nodes[self.skin_elements])

    @property
    def full_snapshot_count(self):
        return len(self.plus_boundary_nodes)


def neighborhood(geom, node_i, t, skin_inside=2, skin_outside=3):
    """Build the :class:`Neighborhood` of coarse node ``node_i`` with oversampling width ``t``."""
    if t < 0:
        raise ValueError("oversampling width must be non-negative")
    omega = geom.omega_box(node_i)
    return Neighborhood(geom, node_i, geom.is_interior(node_i), omega,
                        omega.grow(t, geom.domain), t, skin_inside, skin_outside)


def interior_snapshot_count(fine_per_coarse, t):
    """Perimeter node count of an unclipped oversampled neighborhood."""
    return 4 * (2 * fine_per_coarse + 2 * t)
