"""Hyper-dual numbers for exact second derivatives.

A hyper-dual number a + b e1 + c e2 + d e1e2 with e1^2 = e2^2 = 0 carries,
after seeding, f, df/ds1, df/ds2 and d2f/ds1ds2. Components may be numpy
arrays, so one pass differentiates a function at many points.
"""

from __future__ import annotations

import numpy as np


class DomainError(ValueError):
    """Evaluation at a point where the function is not twice differentiable."""


class HyperDual:
    __slots__ = ("a", "b", "c", "d")
    __array_priority__ = 1000

    def __init__(self, a, b=0.0, c=0.0, d=0.0):
        self.a = a
        self.b = b
        self.c = c
        self.d = d

    def __repr__(self) -> str:
        return f"HyperDual({self.a!r}, {self.b!r}, {self.c!r}, {self.d!r})"

    # chain rule for a scalar function with derivatives f0, f1, f2 at self.a
    def _apply(self, f0, f1, f2) -> "HyperDual":
        return HyperDual(f0, f1 * self.b, f1 * self.c, f1 * self.d + f2 * self.b * self.c)

    def __neg__(self):
        return HyperDual(-self.a, -self.b, -self.c, -self.d)

    def __pos__(self):
        return self

    def __add__(self, other):
        if isinstance(other, HyperDual):
            return HyperDual(self.a + other.a, self.b + other.b, self.c + other.c, self.d + other.d)
        return HyperDual(self.a + other, self.b, self.c, self.d)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, HyperDual):
            return HyperDual(
                self.a * other.a,
                self.a * other.b + self.b * other.a,
                self.a * other.c + self.c * other.a,
                self.a * other.d + self.b * other.c + self.c * other.b + self.d * other.a,
            )
        return HyperDual(self.a * other, self.b * other, self.c * other, self.d * other)

    __rmul__ = __mul__

    def reciprocal(self):
        if np.any(np.asarray(self.a) == 0):
            raise ZeroDivisionError("hyper-dual division by zero real part")
        inv = 1.0 / self.a
        return self._apply(inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, HyperDual):
            return self * other.reciprocal()
        return HyperDual(self.a / other, self.b / other, self.c / other, self.d / other)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, HyperDual):
            return exp(p * log(self))
        if p == 0:
            return HyperDual(np.ones_like(np.asarray(self.a, dtype=float)))
        if float(p).is_integer() and p > 0:
            n = int(p)
            a = self.a
            return self._apply(a**n, n * a ** (n - 1), n * (n - 1) * a ** (n - 2) if n > 1 else 0.0 * a)
        a = np.asarray(self.a, dtype=float)
        if np.any(a <= 0):
            raise DomainError(f"non-integer power {p} needs a positive base")
        return self._apply(a**p, p * a ** (p - 1), p * (p - 1) * a ** (p - 2))


def _is_hd(x) -> bool:
    return isinstance(x, HyperDual)


def sin(x):
    if _is_hd(x):
        return x._apply(np.sin(x.a), np.cos(x.a), -np.sin(x.a))
    return np.sin(x)


def cos(x):
    if _is_hd(x):
        return x._apply(np.cos(x.a), -np.sin(x.a), -np.cos(x.a))
    return np.cos(x)


def exp(x):
    if _is_hd(x):
        e = np.exp(x.a)
        return x._apply(e, e, e)
    return np.exp(x)


def log(x):
    if _is_hd(x):
        if np.any(np.asarray(x.a) <= 0):
            raise DomainError("log of non-positive value")
        return x._apply(np.log(x.a), 1.0 / x.a, -1.0 / x.a**2)
    return np.log(x)


def sqrt(x):
    if _is_hd(x):
        if np.any(np.asarray(x.a) <= 0):
            raise DomainError("sqrt is not differentiable at 0")
        s = np.sqrt(x.a)
        return x._apply(s, 0.5 / s, -0.25 / (s * x.a))
    return np.sqrt(x)


def fabs(x):
    if _is_hd(x):
        if np.any(np.asarray(x.a) == 0):
            raise DomainError("|x| is not differentiable at 0")
        sg = np.sign(x.a)
        return x._apply(np.abs(x.a), sg, 0.0 * sg)
    return np.abs(x)


def hd_derivatives(u, x):
    """Value, gradient and Hessian of ``u(x1, x2)`` at one point or many.

    ``x`` is (2,) or (N, 2). Three seeded passes: (e1, e2) = (x1, x2) for the
    gradient and mixed entry, then (x1, x1) and (x2, x2) for the diagonal.
    """
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    x1, x2 = pts[:, 0], pts[:, 1]
    one = np.ones_like(x1)
    zero = np.zeros_like(x1)

    r = _as_hd(u(HyperDual(x1, one, zero, zero), HyperDual(x2, zero, one, zero)), x1)
    rxx = _as_hd(u(HyperDual(x1, one, one, zero), HyperDual(x2, zero, zero, zero)), x1)
    ryy = _as_hd(u(HyperDual(x1, zero, zero, zero), HyperDual(x2, one, one, zero)), x1)

    value = np.broadcast_to(r.a, x1.shape).astype(float)
    grad = np.column_stack([np.broadcast_to(r.b, x1.shape), np.broadcast_to(r.c, x1.shape)])
    hess = np.empty((len(x1), 2, 2))
    hess[:, 0, 0] = rxx.d
    hess[:, 1, 1] = ryy.d
    hess[:, 0, 1] = hess[:, 1, 0] = r.d
    if single:
        return float(value[0]), grad[0], hess[0]
    return value, grad, hess


def _as_hd(r, like) -> HyperDual:
    if isinstance(r, HyperDual):
        return r
    z = np.zeros_like(like)
    return HyperDual(np.broadcast_to(r, like.shape), z, z, z)
