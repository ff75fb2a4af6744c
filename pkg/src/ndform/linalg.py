"""Sparse solves, mass matrices and the generalized singular-value probe."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)

DENSE_THRESHOLD = 5000


class SolverError(RuntimeError):
    """Linear solve failed; carries the best residual reached, if any."""

    def __init__(self, message: str, residual: float | None = None, kernel=None):
        super().__init__(message)
        self.residual = residual
        self.kernel = kernel


@dataclass
class SolveReport:
    x: np.ndarray
    residual: float
    iterations: int
    method: str


def from_local_blocks(row_dofs, col_dofs, blocks, shape) -> sp.csr_matrix:
    """Sum dense local blocks into a CSR matrix with sorted column indices.

    Entries are summed in block order, so identical input gives bit-identical
    output.
    """
    row_dofs = np.asarray(row_dofs)
    col_dofs = np.asarray(col_dofs)
    nr, nc = row_dofs.shape[1], col_dofs.shape[1]
    rows = np.broadcast_to(row_dofs[:, :, None], (len(row_dofs), nr, nc)).ravel()
    cols = np.broadcast_to(col_dofs[:, None, :], (len(col_dofs), nr, nc)).ravel()
    mat = sp.coo_matrix((np.asarray(blocks).ravel(), (rows, cols)), shape=shape).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def relative_residual(A, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(b - A @ x)
    return float(r / nb) if nb > 0 else float(r)


def solve_sparse(A, b, tol: float = 1e-10, method: str = "direct",
                 restart: int = 60, maxiter: int = 2000) -> SolveReport:
    """Solve ``A x = b`` and verify the relative residual independently."""
    if tol < 1e-14:
        raise ValueError("tolerance below 1e-14 is not attainable in double precision")
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != len(b):
        raise ValueError(f"incompatible shapes {A.shape} and {b.shape}")
    if not np.any(b):
        return SolveReport(np.zeros_like(b), 0.0, 0, method)

    if method == "direct":
        return _solve_direct(A, b, tol)
    if method == "iterative":
        return _solve_gmres(A, b, tol, restart, maxiter)
    raise ValueError(f"unknown solver method {method!r}")


def _solve_direct(A, b, tol) -> SolveReport:
    try:
        lu = spla.splu(A.tocsc())
    except RuntimeError as exc:
        raise SolverError(f"sparse LU failed: {exc} (matrix singular)") from exc
    diag = np.abs(lu.U.diagonal())
    pivot_ratio = diag.min() / diag.max() if diag.max() > 0 else 0.0
    x = lu.solve(b)
    res = relative_residual(A, x, b)
    steps = 0
    while res > tol and steps < 3 and np.isfinite(res):
        x = x + lu.solve(b - A @ x)
        res = relative_residual(A, x, b)
        steps += 1
    if not np.isfinite(res) or res > tol:
        raise SolverError(
            f"direct solve residual {res:.3e} > tol {tol:.1e}; "
            f"pivot ratio min|U_ii|/max|U_ii| = {pivot_ratio:.3e} (near-singular)",
            residual=res,
        )
    return SolveReport(x, res, 0, "direct")


def _solve_gmres(A, b, tol, restart, maxiter) -> SolveReport:
    try:
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-5, fill_factor=20)
    except RuntimeError as exc:
        raise SolverError(f"incomplete factorization failed: {exc}") from exc
    precond = spla.LinearOperator(A.shape, ilu.solve)
    count = [0]

    def tick(_):
        count[0] += 1

    x, info = spla.gmres(A, b, rtol=tol * 0.5, atol=0.0, restart=restart,
                         maxiter=maxiter, M=precond, callback=tick,
                         callback_type="pr_norm")
    res = relative_residual(A, x, b)
    if info != 0 or res > tol:
        raise SolverError(
            f"GMRES did not converge (info={info}); best residual {res:.3e}",
            residual=res,
        )
    return SolveReport(x, res, count[0], "iterative")


def mass_matrix(space, quad_degree: int | None = None) -> sp.csr_matrix:
    qd = 2 * space.degree + 2 if quad_degree is None else quad_degree
    cq = space.cell_quadrature(qd)
    local = np.einsum("tq,qi,qj->tij", cq.jxw, cq.values, cq.values, optimize=True)
    n = space.dimension
    return from_local_blocks(space.cell_dofs, space.cell_dofs, local, (n, n))


def generalized_sigma_min(B, M, S, dense_threshold: int = DENSE_THRESHOLD) -> float:
    """Smallest sigma >= 0 with sigma^2 w^T S w = w^T B^T M^{-1} B w stationary.

    All three matrices are already restricted to the same DOF set.
    """
    n = B.shape[0]
    if not (B.shape == M.shape == S.shape == (n, n)):
        raise ValueError("B, M and S must be square with equal shapes")
    if n <= dense_threshold:
        return _sigma_min_dense(B, M, S)
    return _sigma_min_sparse(B, M, S)


def _dense(X) -> np.ndarray:
    return X.toarray() if sp.issparse(X) else np.asarray(X, dtype=float)


def _check_spd(Sd: np.ndarray):
    try:
        return sla.cho_factor(Sd)
    except sla.LinAlgError:
        w, v = np.linalg.eigh(Sd)
        raise SolverError(
            f"S is singular on the free DOFs (smallest eigenvalue {w[0]:.3e})",
            kernel=v[:, 0],
        ) from None


def _sigma_min_dense(B, M, S) -> float:
    Bd, Md, Sd = _dense(B), _dense(M), _dense(S)
    Sd = 0.5 * (Sd + Sd.T)
    _check_spd(Sd)
    Mc = sla.cho_factor(0.5 * (Md + Md.T))
    C = Bd.T @ sla.cho_solve(Mc, Bd)
    C = 0.5 * (C + C.T)
    ev = sla.eigh(C, Sd, eigvals_only=True, subset_by_index=[0, 0])
    return float(np.sqrt(max(ev[0], 0.0)))


def _sigma_min_sparse(B, M, S) -> float:
    B = sp.csc_matrix(B)
    M = sp.csc_matrix(M)
    S = sp.csc_matrix(S)
    Blu = spla.splu(B)
    Mlu = spla.splu(M)
    n = B.shape[0]

    def c_mv(w):
        return B.T @ Mlu.solve(B @ w)

    def cinv_mv(w):
        # (B^T M^{-1} B)^{-1} = B^{-1} M B^{-T}
        return Blu.solve(M @ Blu.solve(w, trans="T"))

    C = spla.LinearOperator((n, n), matvec=c_mv, dtype=float)
    Cinv = spla.LinearOperator((n, n), matvec=cinv_mv, dtype=float)
    ev = spla.eigsh(C, k=1, M=S, sigma=0.0, OPinv=Cinv, which="LM",
                    return_eigenvectors=False, tol=1e-10)
    return float(np.sqrt(max(ev[0], 0.0)))


def export_coo(matrix, path: str | Path) -> None:
    """Write ``row col value`` lines, one per stored entry."""
    m = sp.coo_matrix(matrix)
    with open(path, "w") as fh:
        for r, c, v in zip(m.row.tolist(), m.col.tolist(), m.data.tolist()):
            fh.write(f"{r} {c} {v!r}\n")
