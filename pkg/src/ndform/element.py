"""Reference-triangle Lagrange elements, quadrature rules and affine maps.

The reference triangle has vertices (0,0), (1,0), (0,1) with barycentric
coordinates l0 = 1 - x - y, l1 = x, l2 = y. A Lagrange node with lattice
multi-index (a, b, c), a + b + c = k, sits at (b/k, c/k); its basis function
is the barycentric product P_a(l0) P_b(l1) P_c(l2) with
P_m(t) = prod_{j<m} (k t - j) / (j + 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import ceil

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import roots_jacobi

MAX_DEGREE = 4
MAX_TRIANGLE_QUAD = 12
MAX_EDGE_QUAD = 15

# gradients of (l0, l1, l2) in reference coordinates
_BARY_GRAD = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
# local vertex pairs of local edge l (opposite vertex l)
LOCAL_EDGES = ((1, 2), (2, 0), (0, 1))


class DegenerateElementError(ValueError):
    pass


def _lattice(k: int) -> list[tuple[int, int, int]]:
    """Multi-indices ordered: vertices, edge nodes per local edge, interior."""
    verts = [(k, 0, 0), (0, k, 0), (0, 0, k)]
    edges = []
    for a, b in LOCAL_EDGES:
        for m in range(1, k):
            idx = [0, 0, 0]
            idx[a] = k - m
            idx[b] = m
            edges.append(tuple(idx))
    interior = [
        (k - b - c, b, c)
        for c in range(1, k)
        for b in range(1, k - c)
    ]
    return verts + edges + interior


@dataclass(frozen=True, eq=False)
class ReferenceElement:
    degree: int
    multi_indices: tuple[tuple[int, int, int], ...]
    nodes: np.ndarray
    _factors: tuple  # per m: (P_m, P_m', P_m'') as Polynomial objects

    @property
    def n_basis(self) -> int:
        return len(self.multi_indices)

    @property
    def n_vertex(self) -> int:
        return 3

    @property
    def n_per_edge(self) -> int:
        return self.degree - 1

    @property
    def n_interior(self) -> int:
        return (self.degree - 1) * (self.degree - 2) // 2

    def tabulate(self, points) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Basis values (Q, nb), gradients (Q, nb, 2), Hessians (Q, nb, 2, 2)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lam = np.column_stack([1.0 - pts[:, 0] - pts[:, 1], pts[:, 0], pts[:, 1]])
        k = self.degree
        # F[d][m][q, s]: d-th derivative of P_m evaluated at lam[:, s]
        F = np.empty((3, k + 1, len(pts), 3))
        for m, polys in enumerate(self._factors):
            for d in range(3):
                F[d, m] = polys[d](lam)

        nb = self.n_basis
        vals = np.empty((len(pts), nb))
        grads = np.zeros((len(pts), nb, 2))
        hess = np.zeros((len(pts), nb, 2, 2))
        G = _BARY_GRAD
        GG = np.einsum("si,tj->stij", G, G)
        for i, mi in enumerate(self.multi_indices):
            f0 = [F[0, mi[s], :, s] for s in range(3)]
            f1 = [F[1, mi[s], :, s] for s in range(3)]
            f2 = [F[2, mi[s], :, s] for s in range(3)]
            vals[:, i] = f0[0] * f0[1] * f0[2]
            for s in range(3):
                others = [f0[t] for t in range(3) if t != s]
                d1 = f1[s] * others[0] * others[1]
                grads[:, i] += d1[:, None] * G[s]
            for s in range(3):
                for t in range(3):
                    if s == t:
                        o = [f0[r] for r in range(3) if r != s]
                        c = f2[s] * o[0] * o[1]
                    else:
                        r = 3 - s - t
                        c = f1[s] * f1[t] * f0[r]
                    hess[:, i] += c[:, None, None] * GG[s, t]
        return vals, grads, hess


@lru_cache(maxsize=None)
def lagrange_basis(k: int) -> ReferenceElement:
    if int(k) != k or not 1 <= k <= MAX_DEGREE:
        raise ValueError(f"unsupported polynomial degree {k!r}; expected 1..{MAX_DEGREE}")
    k = int(k)
    mis = _lattice(k)
    nodes = np.array([[b / k, c / k] for _, b, c in mis])
    factors = []
    for m in range(k + 1):
        p = Polynomial([1.0])
        for j in range(m):
            p = p * Polynomial([-j / (j + 1), k / (j + 1)])
        factors.append((p, p.deriv(1), p.deriv(2)))
    return ReferenceElement(k, tuple(mis), nodes, tuple(factors))


@dataclass(frozen=True, eq=False)
class QuadRule:
    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self) -> int:
        return len(self.weights)


@lru_cache(maxsize=None)
def triangle_quadrature(required_degree: int) -> QuadRule:
    """Collapsed Gauss-Jacobi rule on the reference triangle.

    Exact for total degree ``2m - 1 >= required_degree`` with m points per
    direction; weights are positive and sum to 1/2. The one-point rule is
    the centroid rule.
    """
    d = max(int(required_degree), 0)
    if d > MAX_TRIANGLE_QUAD:
        raise ValueError(f"triangle quadrature degree {d} exceeds {MAX_TRIANGLE_QUAD}")
    m = max(1, ceil((d + 1) / 2))
    xi, wx = roots_jacobi(m, 1.0, 0.0)
    eta, wy = np.polynomial.legendre.leggauss(m)
    x = (1.0 + xi) / 2.0
    t = (1.0 + eta) / 2.0
    X = np.repeat(x, m)
    T = np.tile(t, m)
    pts = np.column_stack([X, (1.0 - X) * T])
    w = np.outer(wx / 4.0, wy / 2.0).ravel()
    return QuadRule(pts, w, 2 * m - 1)


@lru_cache(maxsize=None)
def edge_quadrature(required_degree: int) -> QuadRule:
    """Gauss-Legendre rule on [0, 1]; points returned as shape (m,)."""
    d = max(int(required_degree), 0)
    if d > MAX_EDGE_QUAD:
        raise ValueError(f"edge quadrature degree {d} exceeds {MAX_EDGE_QUAD}")
    m = max(1, ceil((d + 1) / 2))
    x, w = np.polynomial.legendre.leggauss(m)
    return QuadRule((x + 1.0) / 2.0, w / 2.0, 2 * m - 1)


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x = v0 + J @ xi for one triangle (or a batch when arrays carry a leading axis)."""

    vertices: np.ndarray
    jacobian: np.ndarray
    inv_transpose: np.ndarray
    det: np.ndarray

    @classmethod
    def from_vertices(cls, vertices) -> "AffineMap":
        v = np.asarray(vertices, dtype=float)
        J = np.stack([v[..., 1, :] - v[..., 0, :], v[..., 2, :] - v[..., 0, :]], axis=-1)
        det = J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
        if np.any(np.abs(det) < 1e-14):
            raise DegenerateElementError("triangle with |det J| < 1e-14")
        inv = np.empty_like(J)
        inv[..., 0, 0] = J[..., 1, 1]
        inv[..., 1, 1] = J[..., 0, 0]
        inv[..., 0, 1] = -J[..., 0, 1]
        inv[..., 1, 0] = -J[..., 1, 0]
        inv /= det[..., None, None]
        return cls(v, J, np.swapaxes(inv, -1, -2), np.abs(det))

    def __call__(self, ref_points) -> np.ndarray:
        xi = np.atleast_2d(np.asarray(ref_points, dtype=float))
        return self.vertices[..., None, 0, :] + xi @ np.swapaxes(self.jacobian, -1, -2)

    def inverse(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float)) - self.vertices[..., None, 0, :]
        # xi = J^{-1} (x - v0) and J^{-1} = (J^{-T})^T
        return x @ self.inv_transpose


def physical_derivatives(amap: AffineMap, ref_grad, ref_hess):
    """Chain rule for an affine map: grad = J^-T g, hess = J^-T H J^-1."""
    if np.any(amap.det < 1e-14):
        raise DegenerateElementError("triangle with |det J| < 1e-14")
    K = amap.inv_transpose
    g = np.asarray(ref_grad, dtype=float)
    H = np.asarray(ref_hess, dtype=float)
    grad = np.einsum("ij,...j->...i", K, g)
    hess = np.einsum("ia,...ab,jb->...ij", K, H, K)
    return grad, hess
