"""Coefficient fields, exact solutions and right-hand sides of the model problems.

Exact solutions are written once as functions of ``(x1, x2)`` using the
elementary functions of :mod:`ndform.hyperdual`, so they evaluate on plain
arrays and on hyper-dual numbers alike. Right-hand sides come from the
hyper-dual Hessian, f = -A : D^2 u.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import hyperdual as hd

R_CLAMP = 1e-14

Domain = tuple[float, float, float, float]


@dataclass(frozen=True)
class CoefficientField:
    """Symmetric matrix field ``A(points) -> (N, 2, 2)``."""

    func: Callable[[np.ndarray], np.ndarray]
    lam: float
    Lam: float
    smoothness: str
    div: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.func(pts)

    @classmethod
    def constant(cls, A0) -> "CoefficientField":
        A0 = np.asarray(A0, dtype=float)
        if A0.shape != (2, 2) or not np.allclose(A0, A0.T, rtol=0, atol=1e-14):
            raise ValueError("constant coefficient must be a symmetric 2x2 matrix")
        eig = np.linalg.eigvalsh(A0)
        return cls(
            func=lambda p: np.broadcast_to(A0, (len(p), 2, 2)).copy(),
            lam=float(eig[0]),
            Lam=float(eig[1]),
            smoothness="constant",
            div=lambda p: np.zeros((len(p), 2)),
        )

    def scaled(self, factor: float) -> "CoefficientField":
        div = None if self.div is None else (lambda p: factor * self.div(p))
        lo, hi = sorted((factor * self.lam, factor * self.Lam))
        return CoefficientField(lambda p: factor * self.func(p), lo, hi, self.smoothness, div)


def _sym(a11, a12, a22) -> np.ndarray:
    out = np.empty(a11.shape + (2, 2))
    out[..., 0, 0] = a11
    out[..., 0, 1] = out[..., 1, 0] = a12
    out[..., 1, 1] = a22
    return out


def _radius(p: np.ndarray) -> np.ndarray:
    return np.maximum(np.hypot(p[:, 0], p[:, 1]), R_CLAMP)


def _a_test1(p):
    s = np.sqrt(_radius(p))
    return _sym(s + 1.0, -s, 5.0 * s + 1.0)


def _a_test2(p):
    r = np.hypot(p[:, 0], p[:, 1])
    s = np.zeros_like(r)
    big = r >= R_CLAMP
    s[big] = -1.0 / np.log(r[big])
    return _sym(5.0 * s + 15.0, np.ones_like(r), s + 3.0)


def _a_test3(p):
    c1 = np.cbrt(p[:, 0])
    c2 = np.cbrt(p[:, 1])
    return (16.0 / 9.0) * _sym(c1 * c1, -c1 * c2, c2 * c2)


def _a_smooth(p):
    x, y = p[:, 0], p[:, 1]
    return _sym(1.0 + x * x, 0.5 * x * y, 1.0 + y * y)


def _div_smooth(p):
    # column sums of the divergence: d/dx A_1j + d/dy A_2j
    return np.column_stack([2.5 * p[:, 0], 2.5 * p[:, 1]])


def _u_test1(x1, x2):
    return hd.sin(2 * np.pi * x1) * hd.sin(np.pi * x2) * hd.exp(x1 * hd.cos(x2))


def _u_test2(x1, x2):
    return hd.sqrt(x1 * x1 + x2 * x2) ** 1.75


def _u_test3(x1, x2):
    return x1 ** (4.0 / 3.0) - x2 ** (4.0 / 3.0)


def _u_sinsin(x1, x2):
    return hd.sin(np.pi * x1) * hd.sin(np.pi * x2)


def _u_poly(x1, x2):
    return x1 * x2


def _eig_bounds_test1():
    r_max = np.sqrt(0.5)
    top = np.linalg.eigvalsh(np.array([[1.0, -1.0], [-1.0, 5.0]]))[1]
    return 1.0, 1.0 + top * np.sqrt(r_max)


def _eig_bounds_test2():
    s_max = -1.0 / np.log(np.sqrt(0.5))
    lo = np.linalg.eigvalsh(np.array([[15.0, 1.0], [1.0, 3.0]]))[0]
    hi = np.linalg.eigvalsh(np.array([[15.0 + 5 * s_max, 1.0], [1.0, 3.0 + s_max]]))[1]
    return float(lo), float(hi)


_T1_LAM = _eig_bounds_test1()
_T2_LAM = _eig_bounds_test2()

TEST1_A = CoefficientField(_a_test1, *_T1_LAM, smoothness="holder")
TEST2_A = CoefficientField(_a_test2, *_T2_LAM, smoothness="uniformly_continuous")
TEST3_A = CoefficientField(_a_test3, 0.0, 32.0 / 9.0, smoothness="degenerate")
SMOOTH_A = CoefficientField(_a_smooth, 1.0, 2.5, smoothness="smooth", div=_div_smooth)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    domain: Domain
    A: CoefficientField
    u: Callable  # u(x1, x2) over arrays or hyper-duals
    expected_rates: dict = field(default_factory=dict)
    f_exact: Callable[[np.ndarray], np.ndarray] | None = None
    note: str = ""

    def exact_value(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        return np.broadcast_to(np.asarray(self.u(p[:, 0], p[:, 1]), dtype=float), (len(p),)).copy()

    def exact_derivatives(self, points):
        """(value, gradient, Hessian) of the exact solution at (N, 2) points."""
        return hd.hd_derivatives(self.u, np.atleast_2d(np.asarray(points, dtype=float)))

    def exact_gradient(self, points) -> np.ndarray:
        return self.exact_derivatives(points)[1]

    def exact_hessian(self, points) -> np.ndarray:
        return self.exact_derivatives(points)[2]

    def f(self, points) -> np.ndarray:
        p = np.atleast_2d(np.asarray(points, dtype=float))
        if self.f_exact is not None:
            return self.f_exact(p)
        return rhs_eval(self, p)

    def boundary_g(self, points) -> np.ndarray:
        return self.exact_value(points)


def rhs_eval(spec: ProblemSpec, x) -> np.ndarray | float:
    """-A(x) : D^2 u(x) from the hyper-dual Hessian."""
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    H = hd.hd_derivatives(spec.u, pts)[2]
    f = -np.einsum("nij,nij->n", spec.A(pts), H)
    return float(f[0]) if single else f


def _zero(p):
    return np.zeros(len(p))


_REGISTRY: dict[str, Callable[[], ProblemSpec]] = {
    "test1": lambda: ProblemSpec(
        "test1", (-0.5, 0.5, -0.5, 0.5), TEST1_A, _u_test1,
        expected_rates={"w1p": "k", "hess": "k-1"},
        note="Holder continuous A, smooth u",
    ),
    "test2": lambda: ProblemSpec(
        "test2", (0.0, 0.5, 0.0, 0.5), TEST2_A, _u_test2,
        expected_rates={"w1p": "min(k, 7/4)", "hess": "min(k, 7/4) - 1"},
        note="uniformly continuous A, u = |x|^(7/4)",
    ),
    "test3": lambda: ProblemSpec(
        "test3", (0.0, 1.0, 0.0, 1.0), TEST3_A, _u_test3,
        expected_rates={"lp": "4/3", "w1p": "5/6"},
        f_exact=_zero,
        note="degenerate A = grad u grad u^T, f = 0",
    ),
    "smooth": lambda: ProblemSpec(
        "smooth", (0.0, 1.0, 0.0, 1.0), SMOOTH_A, _u_sinsin,
        expected_rates={"lp": "k+1", "w1p": "k", "hess": "k-1"},
        note="smooth SPD A with known divergence",
    ),
    "manufactured_poly": lambda: ProblemSpec(
        "manufactured_poly", (-0.5, 0.5, -0.5, 0.5), TEST1_A, _u_poly,
        expected_rates={"exact_for_k_ge": 2},
        note="u = x1 x2 with the Holder coefficient",
    ),
    "laplace": lambda: ProblemSpec(
        "laplace", (0.0, 1.0, 0.0, 1.0), CoefficientField.constant(np.eye(2)), _u_sinsin,
        expected_rates={"lp": "k+1", "w1p": "k", "hess": "k-1"},
        note="A = I",
    ),
}

PROBLEM_IDS = tuple(_REGISTRY)


def problem(name: str) -> ProblemSpec:
    try:
        return _REGISTRY[name]()
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(PROBLEM_IDS)}") from None
