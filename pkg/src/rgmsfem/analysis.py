"""Sample-wise check of the deterministic approximation bound for randomized snapshots.

Given full snapshot rows ``Psi`` (m x n) on a neighborhood, a Gaussian draw
``R`` (l x m) gives random rows ``R Psi``. Simultaneous diagonalization

    U^T (Psi A Psi^T) U = I,    U^T (Psi M Psi^T) U = Lambda = diag(1/lambda_j)

with ``lambda`` ascending, and the split ``R U^{-T} = [H S]`` (first ``k``
columns in ``H``), lead to the coefficients ``xi_r = F^T xi`` with
``F = U^{-T} [pinv(H); 0]``. The error ``xi^T Psi - xi_r^T R Psi`` then has
squared M-norm at most ``(|pinv(H) S| + 1)^2 / lambda_{k+1}`` times the squared
energy of ``xi^T Psi``. The same quantity with ``lambda_{k+1}`` squared in the
denominator (dimensionally inconsistent unless lambda is scaled to 1) is
reported alongside as the ``stated`` bound.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .snapshot import full_snapshots, neighborhood_rng
from .spectral import RANK_RTOL, local_matrices

SLACK = 1e-8


@dataclass
class BoundCertificate:
    """Outcome of one Gaussian draw on one neighborhood.

    ``observed`` holds squared M-norm errors of the constructed coefficients,
    ``optimal`` the squared errors of the best M-projection onto the random
    span, ``bound`` the proven right-hand side and ``bound_stated`` the variant
    with ``lambda_{k+1}^2``. Lambda indices are 1-based in ascending order.
    """

    node: int
    seed: int
    k: int
    l: int
    m: int
    lambda_k1: float
    hs_norm: float
    t_norm: float
    observed: np.ndarray
    optimal: np.ndarray
    bound: np.ndarray
    bound_stated: np.ndarray
    diag_residual: float
    ok: bool = True
    reason: str = ""

    def _ratio(self, b):
        return float(np.max(self.observed / np.maximum(b, 1e-300))) if self.ok else np.inf

    @property
    def max_ratio(self):
        return self._ratio(self.bound)

    @property
    def max_ratio_stated(self):
        return self._ratio(self.bound_stated)

    @property
    def passed(self):
        return self.ok and bool(np.all(self.observed <= self.bound * (1 + SLACK) + SLACK * self.bound.max()))

    @property
    def passed_stated(self):
        b = self.bound_stated
        return self.ok and bool(np.all(self.observed <= b * (1 + SLACK) + SLACK * b.max()))

    @property
    def optimal_ok(self):
        scale = max(float(self.observed.max()), 1e-300) if self.ok else 1.0
        return self.ok and bool(np.all(self.optimal <= self.observed + SLACK * scale))


def full_rank_snapshots(Psi, M, rtol=RANK_RTOL):
    """Rows spanning ``Psi``'s row space with the constant removed (M-orthogonally).

    Constants have zero energy, so they are dropped before the energy Gram
    matrix can be inverted; an SVD cutoff then leaves ``m`` independent rows.
    """
    one = np.ones(Psi.shape[1])
    Mone = M @ one
    P = Psi - np.outer(Psi @ Mone / (one @ Mone), one)
    _, sv, Vt = np.linalg.svd(P, full_matrices=False)
    return Vt[sv > rtol * sv[0]]


def simultaneous_diagonalization(GA, GM):
    """``U`` with ``U^T GA U = I`` and ``U^T GM U = diag(1/lam)``, ``lam`` ascending."""
    lam, theta = sla.eigh(0.5 * (GA + GA.T), 0.5 * (GM + GM.T))
    U = theta / np.sqrt(lam)
    return U, lam


def m_norm2(v, M):
    v = np.atleast_2d(v)
    return np.einsum("ij,ij->i", v, (M @ v.T).T)


def best_approx_error(Psi, Psi_r, xi, M):
    """M-distance from ``xi^T Psi`` to the row span of ``Psi_r`` (squared, per column of ``xi``)."""
    xi = np.asarray(xi, dtype=float).reshape(Psi.shape[0], -1)
    V = xi.T @ Psi
    if Psi_r.shape[0] == 0 or not np.any(Psi_r):
        return m_norm2(V, M)
    G = Psi_r @ (M @ Psi_r.T)
    B = Psi_r @ (M @ V.T)
    c = np.linalg.lstsq(G, B, rcond=None)[0]
    return np.maximum(m_norm2(V - c.T @ Psi_r, M), 0.0)


def certificate(Psi, A, M, k, l, rng, n_tests, node=-1, seed=0):
    """Check the bound for one draw ``R`` (l x m) and ``n_tests`` Gaussian test vectors."""
    m = Psi.shape[0]
    if not k < l <= m:
        raise ValueError(f"need k < l <= m, got k={k}, l={l}, m={m}")
    GA = Psi @ (A @ Psi.T)
    GM = Psi @ (M @ Psi.T)
    U, lam = simultaneous_diagonalization(GA, GM)
    Ut = GA @ U  # U^{-T}
    diag_res = max(np.abs(U.T @ GA @ U - np.eye(m)).max(),
                   np.abs(U.T @ GM @ U - np.diag(1 / lam)).max() * lam[0])
    R = rng.standard_normal((l, m))
    xi = rng.standard_normal((m, n_tests))
    RU = R @ Ut
    H, S = RU[:, :k], RU[:, k:]
    lam_k1 = float(lam[k])
    # trailing block of Lambda^{1/2}
    t_norm = float(np.max(1 / np.sqrt(lam[k:])))
    energy = m_norm2(xi.T @ Psi, A)
    Psi_r = R @ Psi
    optimal = best_approx_error(Psi, Psi_r, xi, M)
    if np.linalg.matrix_rank(H) < k:
        nan = np.full(n_tests, np.nan)
        return BoundCertificate(node, seed, k, l, m, lam_k1, np.inf, t_norm, nan, optimal, nan, nan,
                                diag_res, ok=False, reason="H is rank deficient")
    Hp = np.linalg.solve(H.T @ H, H.T)
    hs = float(np.linalg.norm(Hp @ S, 2))
    F = Ut @ np.vstack([Hp, np.zeros((m - k, l))])
    xi_r = F.T @ xi
    err = xi.T @ Psi - xi_r.T @ Psi_r
    observed = np.maximum(m_norm2(err, M), 0.0)
    bound = (hs + 1) ** 2 / lam_k1 * energy
    stated = ((hs + 1) / lam_k1) ** 2 * energy
    return BoundCertificate(node, seed, k, l, m, lam_k1, hs, t_norm, observed, optimal, bound, stated,
                            diag_res)


def lemma1_certificate(geom, field, nbhd, k, l, seed, n_tests, weight_field=None):
    """Certificate for a neighborhood using its full snapshot set (constant removed)."""
    weight_field = field if weight_field is None else weight_field
    snaps = full_snapshots(geom, field, nbhd)
    A, M = local_matrices(geom, field, weight_field, nbhd.omega)
    Psi = full_rank_snapshots(snaps.rows, M.matrix)
    rng = neighborhood_rng(seed, nbhd.node, 2)
    return certificate(Psi, A.matrix, M.matrix, k, l, rng, n_tests, nbhd.node, seed)
