"""Independent dense reference computations used by the tests."""
import numpy as np

# 2-point Gauss rule on [0, 1]
_GP = 0.5 + np.array([-1, 1]) / (2 * np.sqrt(3))


def quad_element(hx, hy):
    """Element matrices by Gauss quadrature of the bilinear shape functions (oracle)."""
    corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    K = np.zeros((4, 4))
    M = np.zeros((4, 4))
    for s in _GP:
        for t in _GP:
            N = np.array([(s if a else 1 - s) * (t if b else 1 - t) for a, b in corners])
            dNs = np.array([(1 if a else -1) * (t if b else 1 - t) for a, b in corners])
            dNt = np.array([(s if a else 1 - s) * (1 if b else -1) for a, b in corners])
            gx, gy = dNs / hx, dNt / hy
            w = 0.25 * hx * hy
            K += w * (np.outer(gx, gx) + np.outer(gy, gy))
            M += w * np.outer(N, N)
    return K, M


def dense_assembly(geom, kappa):
    """Dense global matrices, one element at a time, via the quadrature oracle."""
    K0, M0 = quad_element(geom.hx, geom.hy)
    K = np.zeros((geom.n_nodes, geom.n_nodes))
    M = np.zeros_like(K)
    for e, nodes in enumerate(geom.element_nodes):
        K[np.ix_(nodes, nodes)] += kappa[e] * K0
        M[np.ix_(nodes, nodes)] += kappa[e] * M0
    return K, M


def dense_dirichlet(K, free, fixed, values, rhs=None):
    """Dense solve of ``K u = rhs`` with ``u[fixed] = values``."""
    n = K.shape[0]
    u = np.zeros(n)
    u[fixed] = values
    b = -K[np.ix_(free, fixed)] @ values
    if rhs is not None:
        b = b + rhs[free]
    u[free] = np.linalg.solve(K[np.ix_(free, free)], b)
    return u


def dense_region(geom, kappa, elems):
    """Dense stiffness and mass restricted to the nodes touched by ``elems``."""
    K0, M0 = quad_element(geom.hx, geom.hy)
    nodes = np.unique(geom.element_nodes[elems])
    pos = {n: i for i, n in enumerate(nodes)}
    K = np.zeros((len(nodes), len(nodes)))
    M = np.zeros_like(K)
    for e in elems:
        loc = [pos[n] for n in geom.element_nodes[e]]
        K[np.ix_(loc, loc)] += kappa[e] * K0
        M[np.ix_(loc, loc)] += kappa[e] * M0
    return nodes, K, M


def dense_geneig(A, S):
    """Generalized eigenpairs via an explicit Cholesky reduction (independent of scipy's driver)."""
    L = np.linalg.cholesky(S)
    Li = np.linalg.inv(L)
    lam, W = np.linalg.eigh(Li @ A @ Li.T)
    return lam, Li.T @ W
