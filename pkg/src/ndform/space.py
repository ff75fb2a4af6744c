"""Continuous P_k Lagrange spaces on a Mesh."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .element import (
    AffineMap,
    LOCAL_EDGES,
    ReferenceElement,
    edge_quadrature,
    lagrange_basis,
    triangle_quadrature,
)
from .mesh import Mesh


@dataclass(frozen=True)
class CellQuadrature:
    """Basis data at a triangle quadrature rule, for every cell at once.

    ``jxw`` already includes |det J|. Physical gradients and Hessians are
    only computed when first requested.
    """

    points: np.ndarray   # (T, Q, 2) physical
    jxw: np.ndarray      # (T, Q)
    values: np.ndarray   # (Q, nb), identical on every cell
    ref_grads: np.ndarray
    ref_hess: np.ndarray
    inv_t: np.ndarray    # (T, 2, 2)

    @cached_property
    def grads(self) -> np.ndarray:
        # (T, Q, nb, 2)
        return np.einsum("tij,qbj->tqbi", self.inv_t, self.ref_grads, optimize=True)

    @cached_property
    def hess(self) -> np.ndarray:
        # (T, Q, nb, 2, 2) = K H K^T with K = J^{-T}
        K = self.inv_t[:, None, None]
        return K @ self.ref_hess[None] @ np.swapaxes(K, -1, -2)


@dataclass(frozen=True)
class EdgeQuadrature:
    """Basis traces on every mesh edge, seen from both adjacent cells.

    ``grads_minus`` is zero on boundary edges. ``wxh`` is the quadrature
    weight times the edge length.
    """

    edges: np.ndarray         # (E,)
    interior: np.ndarray      # (E,) bool
    points: np.ndarray        # (E, Q, 2)
    wxh: np.ndarray           # (E, Q)
    normal: np.ndarray        # (E, 2), out of the plus triangle
    length: np.ndarray        # (E,)
    plus: np.ndarray          # (E,)
    minus: np.ndarray         # (E,), -1 on the boundary
    values_plus: np.ndarray   # (E, Q, nb)
    grads_plus: np.ndarray    # (E, Q, nb, 2)
    grads_minus: np.ndarray   # (E, Q, nb, 2)


@dataclass(frozen=True, eq=False)
class Space:
    mesh: Mesh
    degree: int
    element: ReferenceElement
    cell_dofs: np.ndarray          # (T, nb)
    dof_coordinates: np.ndarray    # (N, 2)
    boundary_dofs: np.ndarray      # sorted indices
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dimension(self) -> int:
        return len(self.dof_coordinates)

    @property
    def free_dofs(self) -> np.ndarray:
        mask = np.ones(self.dimension, dtype=bool)
        mask[self.boundary_dofs] = False
        return np.flatnonzero(mask)

    @cached_property
    def maps(self) -> AffineMap:
        """Batched affine maps, one per triangle."""
        return AffineMap.from_vertices(self.mesh.vertices[self.mesh.triangles])

    def cell_quadrature(self, degree: int) -> CellQuadrature:
        key = ("cellq", int(degree))
        if key not in self._cache:
            rule = triangle_quadrature(degree)
            vals, grads, hess = self.element.tabulate(rule.points)
            maps = self.maps
            pts = maps(rule.points[None, :, :])
            jxw = maps.det[:, None] * rule.weights[None, :]
            self._cache[key] = CellQuadrature(pts, jxw, vals, grads, hess, maps.inv_transpose)
        return self._cache[key]

    def edge_quadrature(self, degree: int) -> EdgeQuadrature:
        key = ("edgeq", int(degree))
        if key in self._cache:
            return self._cache[key]
        mesh = self.mesh
        rule = edge_quadrature(degree)
        edges = np.arange(mesh.n_edges)
        p0 = mesh.vertices[mesh.edge_vertices[:, 0]]
        p1 = mesh.vertices[mesh.edge_vertices[:, 1]]
        pts = p0[:, None, :] + rule.points[None, :, None] * (p1 - p0)[:, None, :]
        plus = mesh.edge_plus
        minus = mesh.edge_minus
        interior = minus >= 0
        nq, nb = len(rule), self.element.n_basis

        vp, gp = self._trace(plus, pts)
        gm = np.zeros_like(gp)
        if interior.any():
            _, gm_int = self._trace(minus[interior], pts[interior])
            gm[interior] = gm_int
        data = EdgeQuadrature(
            edges=edges,
            interior=interior,
            points=pts,
            wxh=rule.weights[None, :] * mesh.edge_length[:, None],
            normal=mesh.edge_normal,
            length=mesh.edge_length,
            plus=plus,
            minus=minus,
            values_plus=vp.reshape(len(edges), nq, nb),
            grads_plus=gp,
            grads_minus=gm,
        )
        self._cache[key] = data
        return data

    def _trace(self, tris, pts):
        """Basis values and physical gradients of cells ``tris`` at ``pts``."""
        maps = self.maps
        K = maps.inv_transpose[tris]
        v0 = maps.vertices[tris, 0, :]
        ref = np.einsum("eqj,eji->eqi", pts - v0[:, None, :], K)
        ne, nq = ref.shape[:2]
        vals, grads, _ = self.element.tabulate(ref.reshape(-1, 2))
        nb = vals.shape[1]
        grads = grads.reshape(ne, nq, nb, 2)
        phys = np.einsum("eij,eqbj->eqbi", K, grads, optimize=True)
        return vals.reshape(ne, nq, nb), phys

    def zero(self) -> np.ndarray:
        return np.zeros(self.dimension)

    def interpolate(self, g) -> np.ndarray:
        """Nodal interpolant: coefficient i is g at DOF coordinate i.

        ``g`` receives an (N, 2) array and returns N values, or is a number.
        """
        if np.isscalar(g):
            return np.full(self.dimension, float(g))
        vals = np.asarray(g(self.dof_coordinates), dtype=float)
        return np.broadcast_to(vals, (self.dimension,)).copy()

    def l2_project(self, g, quad_degree: int | None = None, tol: float = 1e-12) -> np.ndarray:
        from .linalg import mass_matrix, solve_sparse

        qd = 2 * self.degree + 2 if quad_degree is None else quad_degree
        cq = self.cell_quadrature(qd)
        gv = np.asarray(g(cq.points.reshape(-1, 2)), dtype=float).reshape(cq.jxw.shape)
        local = np.einsum("tq,qi->ti", gv * cq.jxw, cq.values)
        b = np.zeros(self.dimension)
        np.add.at(b, self.cell_dofs, local)
        report = solve_sparse(mass_matrix(self, qd), b, tol=tol)
        return report.x

    def eval(self, coef, triangle: int, ref_point):
        """Value, gradient and Hessian of the FE function on one triangle."""
        vals, grads, hess = self.element.tabulate(np.atleast_2d(ref_point))
        c = np.asarray(coef)[self.cell_dofs[triangle]]
        K = self.maps.inv_transpose[triangle]
        g = grads[0] @ K.T
        H = K @ hess[0] @ K.T
        return float(vals[0] @ c), c @ g, np.einsum("i,ijk->jk", c, H)

    def evaluate(self, coef, points) -> np.ndarray:
        """FE function values at arbitrary physical points inside the domain."""
        tri, ref = self.mesh.locate(points)
        vals, _, _ = self.element.tabulate(ref)
        c = np.asarray(coef)[self.cell_dofs[tri]]
        return np.einsum("qi,qi->q", vals, c)


def build_space(mesh: Mesh, k: int) -> Space:
    """Number DOFs: vertices, then edge nodes by edge, then cell interiors."""
    element = lagrange_basis(k)
    k = element.degree
    V, E, T = mesh.n_vertices, mesh.n_edges, mesh.n_triangles
    ne, ni = k - 1, element.n_interior
    tris = mesh.triangles

    cell_dofs = np.empty((T, element.n_basis), dtype=np.int64)
    cell_dofs[:, :3] = tris
    col = 3
    for l, (a, _) in enumerate(LOCAL_EDGES):
        e = mesh.tri_edges[:, l]
        forward = tris[:, a] == mesh.edge_vertices[e, 0]
        for m in range(1, k):
            j = np.where(forward, m, k - m)
            cell_dofs[:, col] = V + e * ne + (j - 1)
            col += 1
    for r in range(ni):
        cell_dofs[:, col] = V + E * ne + np.arange(T) * ni + r
        col += 1

    N = V + E * ne + T * ni
    maps = AffineMap.from_vertices(mesh.vertices[tris])
    coords = np.empty((N, 2))
    phys_nodes = maps(element.nodes[None, :, :])  # (T, nb, 2)
    coords[cell_dofs.ravel()] = phys_nodes.reshape(-1, 2)
    # vertex coordinates copied exactly
    coords[:V] = mesh.vertices

    x0, x1, y0, y1 = mesh.domain
    tol = 1e-12 * max(1.0, abs(x0), abs(x1), abs(y0), abs(y1))
    on_bnd = (
        (np.abs(coords[:, 0] - x0) < tol)
        | (np.abs(coords[:, 0] - x1) < tol)
        | (np.abs(coords[:, 1] - y0) < tol)
        | (np.abs(coords[:, 1] - y1) < tol)
    )
    return Space(
        mesh=mesh,
        degree=k,
        element=element,
        cell_dofs=cell_dofs,
        dof_coordinates=coords,
        boundary_dofs=np.flatnonzero(on_bnd),
    )
