"""Per-element coefficient fields: plain-text I/O and a seeded channel generator."""
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Piecewise-constant coefficient, one value per fine element.

    ``values`` is flat in element order (row-major, bottom row first).
    """

    values: np.ndarray
    nx: int
    ny: int

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.nx * self.ny:
            raise ValueError(f"expected {self.nx * self.ny} values, got {v.size}")
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("coefficient values must be finite and strictly positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def uniform(cls, geom, value=1.0):
        return cls(np.full(geom.n_elements, float(value)), geom.nx, geom.ny)

    def as_grid(self):
        """``(ny, nx)`` view, row 0 at the bottom."""
        return self.values.reshape(self.ny, self.nx)

    @property
    def contrast(self):
        return self.values.max() / self.values.min()

    def scaled(self, factor):
        return CoefficientField(self.values * factor, self.nx, self.ny)

    def check(self, geom):
        if (self.nx, self.ny) != (geom.nx, geom.ny):
            raise ValueError(f"field is {self.nx}x{self.ny}, grid is {geom.nx}x{geom.ny}")
        return self


def write_array(path, values, nx, ny):
    """Write ``nx ny`` then ``nx*ny`` values, one grid row per line (bottom row first).

    ``path`` may also be an open text file.
    """
    values = np.asarray(values, dtype=float).reshape(ny, nx)
    lines = [f"{nx} {ny}\n"] + [" ".join(repr(float(x)) for x in row) + "\n" for row in values]
    if hasattr(path, "write"):
        path.writelines(lines)
        return
    with open(path, "w") as fh:
        fh.writelines(lines)


def read_array(path):
    """Inverse of :func:`write_array`; returns ``(values, nx, ny)``."""
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError(f"{path}: missing 'nx ny' header")
    try:
        nx, ny = int(tokens[0]), int(tokens[1])
        values = np.array([float(t) for t in tokens[2:]])
    except ValueError as exc:
        raise ValueError(f"{path}: parse failure: {exc}") from None
    if values.size != nx * ny:
        raise ValueError(f"{path}: header says {nx}x{ny} but found {values.size} values")
    return values, nx, ny


def load_field(path, geom=None):
    values, nx, ny = read_array(path)
    field = CoefficientField(values, nx, ny)
    if geom is not None:
        field.check(geom)
    return field


def save_field(path, field):
    write_array(path, field.values, field.nx, field.ny)


def generate_channels(geom, contrast=1e4, seed=0, n_channels=(8, 20), widths=(1, 3),
                      length_fraction=(0.3, 1.0), margin=None):
    """Seeded high-contrast field: background 1 with straight strips of value ``contrast``.

    Strips are horizontal, vertical or diagonal, with random position, width and
    length. The result depends only on ``(geom, contrast, seed)`` and the keyword
    parameters.

    ``margin`` is the width, in fine cells, of a channel-free frame along the
    domain boundary (default: one coarse block). Coarse nodes on the boundary
    carry only a constant mode, so channels cutting through the outer ring of
    coarse blocks put an error floor on every coarse space; the frame keeps the
    heterogeneity where the local spectral bases can resolve it. Pass 0 to
    disable.
    """
    if contrast < 1:
        raise ValueError("contrast must be >= 1")
    rng = np.random.default_rng(seed)
    nx, ny = geom.nx, geom.ny
    high = np.zeros((ny, nx), dtype=bool)
    cy, cx = np.mgrid[0:ny, 0:nx] + 0.5  # cell centers in element units
    margin = geom.fine_per_coarse if margin is None else int(margin)
    if 2 * margin >= min(nx, ny):
        margin = 0
    count = rng.integers(n_channels[0], n_channels[1] + 1)
    for _ in range(count):
        angle = rng.choice([0.0, 0.5 * np.pi, 0.25 * np.pi, 0.75 * np.pi])
        width = rng.integers(widths[0], widths[1] + 1)
        length = rng.uniform(*length_fraction) * max(nx, ny) * (1.5 if angle % (0.5 * np.pi) else 1.0)
        x0, y0 = rng.uniform(margin, nx - margin), rng.uniform(margin, ny - margin)
        d = np.array([np.cos(angle), np.sin(angle)])
        along = (cx - x0) * d[0] + (cy - y0) * d[1]
        across = -(cx - x0) * d[1] + (cy - y0) * d[0]
        high |= (np.abs(along) <= 0.5 * length) & (np.abs(across) < 0.5 * width)
    if margin > 0:
        high[:margin] = high[-margin:] = False
        high[:, :margin] = high[:, -margin:] = False
    values = np.where(high, float(contrast), 1.0)
    return CoefficientField(values.ravel(), nx, ny)
