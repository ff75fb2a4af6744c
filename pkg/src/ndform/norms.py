"""Error norms, the mesh-dependent W^{2,p} norm and observed orders."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.sparse.linalg as spla

from . import hyperdual as hd
from .assembly import QuadDegrees
from .linalg import mass_matrix
from .space import Space


@dataclass
class ErrorReport:
    err_lp: float
    err_w1p_semi: float
    err_hess_broken: float | None
    err_jump_term: float
    err_w2ph: float | None
    p: float
    h: float
    ndof: int
    hessian_available: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


class _FunctionSolution:
    def __init__(self, u):
        self.u = u

    def exact_derivatives(self, points):
        return hd.hd_derivatives(self.u, points)


def _exact_source(exact):
    if hasattr(exact, "exact_derivatives"):
        return exact
    if callable(exact):
        return _FunctionSolution(exact)
    raise TypeError("exact solution must provide exact_derivatives() or be callable")


def fe_cell_values(space: Space, coef, degree: int):
    """u_h, grad u_h and piecewise Hessian at the cell quadrature points."""
    cq = space.cell_quadrature(degree)
    c = np.asarray(coef, dtype=float)[space.cell_dofs]
    val = np.einsum("qi,ti->tq", cq.values, c)
    grad = np.einsum("tqia,ti->tqa", cq.grads, c, optimize=True)
    hess = np.einsum("tqiab,ti->tqab", cq.hess, c, optimize=True)
    return cq, val, grad, hess


def gradient_jumps(space: Space, coef, degree: int):
    """Normal jump of grad u_h at edge quadrature points of interior edges.

    Returns (jumps (Ei, Q), weights*h_e (Ei, Q), h_e (Ei,)).
    """
    eq = space.edge_quadrature(degree)
    inner = eq.interior
    c = np.asarray(coef, dtype=float)
    cp = c[space.cell_dofs[eq.plus[inner]]]
    cm = c[space.cell_dofs[eq.minus[inner]]]
    n = eq.normal[inner]
    gp = np.einsum("eqia,ei,ea->eq", eq.grads_plus[inner], cp, n, optimize=True)
    gm = np.einsum("eqia,ei,ea->eq", eq.grads_minus[inner], cm, n, optimize=True)
    return gp - gm, eq.wxh[inner], eq.length[inner]


def error_norms(space: Space, coef, exact, p: float = 2.0,
                quad: QuadDegrees | None = None) -> ErrorReport:
    """Errors of the FE function ``coef`` against an exact solution.

    The exact solution is taken to be C^1 across interior edges, so the
    jump term only involves u_h.
    """
    if not 1.0 < p < math.inf:
        raise ValueError(f"p must lie in (1, inf), got {p}")
    q = QuadDegrees.default(space.degree) if quad is None else quad
    src = _exact_source(exact)
    cq, val, grad, hess = fe_cell_values(space, coef, q.cell)
    T, Q = cq.jxw.shape
    u, du, d2u = src.exact_derivatives(cq.points.reshape(-1, 2))
    u = np.asarray(u).reshape(T, Q)
    du = np.asarray(du).reshape(T, Q, 2)

    w = cq.jxw
    err_lp = float(np.sum(w * np.abs(u - val) ** p) ** (1 / p))
    err_w1 = float(np.sum(w * np.linalg.norm(du - grad, axis=-1) ** p) ** (1 / p))

    jumps, wxh, he = gradient_jumps(space, coef, q.edge)
    jump_sum = float(np.sum(he[:, None] ** (1 - p) * wxh * np.abs(jumps) ** p))
    err_jump = jump_sum ** (1 / p)

    if d2u is None:
        err_hess = err_w2 = None
        available = False
    else:
        d2u = np.asarray(d2u).reshape(T, Q, 2, 2)
        frob = np.sqrt(np.sum((d2u - hess) ** 2, axis=(-1, -2)))
        hess_sum = float(np.sum(w * frob**p))
        err_hess = hess_sum ** (1 / p)
        err_w2 = (hess_sum + jump_sum) ** (1 / p)
        available = True

    return ErrorReport(
        err_lp=err_lp,
        err_w1p_semi=err_w1,
        err_hess_broken=err_hess,
        err_jump_term=err_jump,
        err_w2ph=err_w2,
        p=p,
        h=space.mesh.h_max,
        ndof=space.dimension,
        hessian_available=available,
    )


def eoc(errors, hs) -> list[float]:
    """Observed orders log(e_{i-1}/e_i) / log(h_{i-1}/h_i); NaN where undefined."""
    e = [float(x) if x is not None else math.nan for x in errors]
    h = [float(x) for x in hs]
    if len(e) != len(h) or len(e) < 2:
        raise ValueError("need equally long error and mesh-size lists of length >= 2")
    if any(b >= a for a, b in zip(h, h[1:])):
        raise ValueError("mesh sizes must be strictly decreasing")
    out = []
    for i in range(1, len(e)):
        if not (e[i - 1] > 0 and e[i] > 0):
            out.append(math.nan)
            continue
        out.append(math.log(e[i - 1] / e[i]) / math.log(h[i - 1] / h[i]))
    return out


def discrete_lph_norm(space: Space, w, p: float = 2.0, dofs=None) -> float:
    """sup over v_h of (w, v_h) / ||v_h||, with v_h spanning ``dofs`` (default all).

    ``w`` is a coefficient vector of ``space`` or a callable on (N, 2) points.
    """
    if p != 2:
        raise NotImplementedError("the discrete dual norm is only available for p = 2")
    M = mass_matrix(space)
    if callable(w):
        from .assembly import assemble_rhs

        r = assemble_rhs(space, w)
    else:
        r = M @ np.asarray(w, dtype=float)
    if dofs is not None:
        dofs = np.asarray(dofs)
        M = M[dofs][:, dofs]
        r = r[dofs]
    if not np.any(r):
        return 0.0
    y = spla.splu(M.tocsc()).solve(r)
    return float(np.sqrt(max(r @ y, 0.0)))


def l2_norm(space: Space, coef) -> float:
    cq, val, _, _ = fe_cell_values(space, coef, 2 * space.degree + 2)
    return float(np.sqrt(np.sum(cq.jxw * val**2)))
