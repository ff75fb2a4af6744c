"""Global operators: the C0 DG form, its constant-coefficient and divergence-form
counterparts, load vectors and Dirichlet constraints.

For the C0 DG form the trial side carries the flux jump
[[A grad w]] = (A grad w+) . n+ + (A grad w-) . n- on each interior edge,
while the continuous test function is traced from the plus cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .linalg import from_local_blocks
from .problems import CoefficientField
from .space import Space


@dataclass(frozen=True)
class QuadDegrees:
    cell: int
    edge: int

    @classmethod
    def default(cls, k: int) -> "QuadDegrees":
        return cls(2 * k + 2, 2 * k + 1)


def _degrees(space: Space, quad: QuadDegrees | None) -> QuadDegrees:
    return QuadDegrees.default(space.degree) if quad is None else quad


def _as_field(A) -> CoefficientField:
    if isinstance(A, CoefficientField):
        return A
    return CoefficientField.constant(A)


def _cell_matrix(space: Space, local: np.ndarray) -> sp.csr_matrix:
    n = space.dimension
    return from_local_blocks(space.cell_dofs, space.cell_dofs, local, (n, n))


def assemble_c0dg(space: Space, A, quad: QuadDegrees | None = None,
                  boundary_flux: bool = True) -> sp.csr_matrix:
    """Matrix K with K[i, j] = a_h(phi_j, phi_i).

    With ``boundary_flux`` the term (A grad phi_j . n) phi_i is also added on
    boundary edges. It only touches rows of boundary DOFs, which Dirichlet
    constraints overwrite, and makes K agree with the constant-coefficient
    stiffness matrix on every row when A is constant.
    """
    A = _as_field(A)
    q = _degrees(space, quad)
    cq = space.cell_quadrature(q.cell)
    T, Q = cq.jxw.shape
    Aq = A(cq.points.reshape(-1, 2)).reshape(T, Q, 2, 2)
    # A : D^2 phi_j at every cell quadrature point
    contraction = np.einsum("tqab,tqjab->tqj", Aq, cq.hess, optimize=True)
    vol = -np.einsum("tq,qi,tqj->tij", cq.jxw, cq.values, contraction, optimize=True)

    eq = space.edge_quadrature(q.edge)
    E, Qe = eq.wxh.shape
    An = np.einsum("eqab,eb->eqa", A(eq.points.reshape(-1, 2)).reshape(E, Qe, 2, 2), eq.normal)
    flux_p = np.einsum("eqja,eqa->eqj", eq.grads_plus, An)
    test = eq.values_plus * eq.wxh[:, :, None]

    sel = np.ones(E, dtype=bool) if boundary_flux else eq.interior
    pp = np.einsum("eqi,eqj->eij", test[sel], flux_p[sel], optimize=True)

    inner = eq.interior
    flux_m = -np.einsum("eqja,eqa->eqj", eq.grads_minus[inner], An[inner])
    pm = np.einsum("eqi,eqj->eij", test[inner], flux_m, optimize=True)

    plus_dofs = space.cell_dofs[eq.plus]
    minus_dofs = space.cell_dofs[eq.minus[inner]]
    rows = np.concatenate([space.cell_dofs, plus_dofs[sel], plus_dofs[inner]])
    cols = np.concatenate([space.cell_dofs, plus_dofs[sel], minus_dofs])
    blocks = np.concatenate([vol, pp, pm])
    n = space.dimension
    return from_local_blocks(rows, cols, blocks, (n, n))


def assemble_constcoef(space: Space, A0, quad: QuadDegrees | None = None) -> sp.csr_matrix:
    """Stiffness matrix of int A0 grad w . grad v for a constant SPD A0."""
    A0 = np.asarray(A0, dtype=float)
    if A0.shape != (2, 2):
        raise ValueError("A0 must be a 2x2 matrix")
    if not np.allclose(A0, A0.T, rtol=1e-14, atol=0.0):
        raise ValueError("A0 must be symmetric")
    if np.linalg.eigvalsh(A0)[0] <= 0:
        raise ValueError("A0 must be positive definite")
    cq = space.cell_quadrature(_degrees(space, quad).cell)
    g = cq.grads
    local = np.einsum("tq,tqia,ab,tqjb->tij", cq.jxw, g, A0, g, optimize=True)
    return _cell_matrix(space, local)


def assemble_divform(space: Space, A: CoefficientField,
                     quad: QuadDegrees | None = None) -> sp.csr_matrix:
    """Standard Galerkin matrix for -div(A grad u) + (div A) . grad u."""
    if A.smoothness not in ("smooth", "constant") or A.div is None:
        raise ValueError(
            f"divergence form needs a differentiable coefficient with known divergence, "
            f"got smoothness {A.smoothness!r}"
        )
    cq = space.cell_quadrature(_degrees(space, quad).cell)
    T, Q = cq.jxw.shape
    pts = cq.points.reshape(-1, 2)
    Aq = A(pts).reshape(T, Q, 2, 2)
    dq = A.div(pts).reshape(T, Q, 2)
    g = cq.grads
    diff = np.einsum("tq,tqia,tqab,tqjb->tij", cq.jxw, g, Aq, g, optimize=True)
    conv = np.einsum("tq,qi,tqa,tqja->tij", cq.jxw, cq.values, dq, g, optimize=True)
    return _cell_matrix(space, diff + conv)


def assemble_rhs(space: Space, f, quad: QuadDegrees | None = None) -> np.ndarray:
    """Load vector b_i = int f phi_i."""
    cq = space.cell_quadrature(_degrees(space, quad).cell)
    if np.isscalar(f):
        fv = np.full(cq.jxw.shape, float(f))
    else:
        fv = np.asarray(f(cq.points.reshape(-1, 2)), dtype=float).reshape(cq.jxw.shape)
    local = np.einsum("tq,qi->ti", fv * cq.jxw, cq.values)
    b = np.zeros(space.dimension)
    np.add.at(b, space.cell_dofs, local)
    return b


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    free_dofs: np.ndarray
    constrained_dofs: np.ndarray
    constrained_values: np.ndarray

    def reduced(self) -> tuple[sp.csr_matrix, np.ndarray]:
        f = self.free_dofs
        return self.matrix[f][:, f], self.rhs[f]


def apply_dirichlet(matrix, rhs, space: Space, g) -> LinearSystem:
    """Fix boundary DOFs to the nodal interpolant of ``g``.

    Constrained columns move to the right-hand side and constrained rows
    become identity rows, so the free block is untouched.
    """
    n = space.dimension
    c = space.boundary_dofs
    if np.isscalar(g):
        vals = np.full(len(c), float(g))
    else:
        vals = np.asarray(g(space.dof_coordinates[c]), dtype=float)
    full = np.zeros(n)
    full[c] = vals
    K = sp.csr_matrix(matrix)
    b = np.asarray(rhs, dtype=float) - K @ full
    b[c] = vals

    keep = np.ones(n)
    keep[c] = 0.0
    P = sp.diags(keep)
    ident = sp.diags(1.0 - keep)
    K = (P @ K @ P + ident).tocsr()
    K.eliminate_zeros()
    K.sort_indices()
    return LinearSystem(K, b, space.free_dofs, c, vals)
