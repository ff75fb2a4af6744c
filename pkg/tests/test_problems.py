import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ndform import hyperdual as hd
from ndform.problems import (
    PROBLEM_IDS,
    CoefficientField,
    ProblemSpec,
    TEST1_A,
    TEST2_A,
    TEST3_A,
    problem,
    rhs_eval,
)


def interior_points(spec, n, rng, margin=1e-3):
    x0, x1, y0, y1 = spec.domain
    pts = np.column_stack([rng.uniform(x0 + margin, x1 - margin, n),
                           rng.uniform(y0 + margin, y1 - margin, n)])
    if spec.name in ("test1", "test2", "manufactured_poly"):
        # keep clear of the origin where |x|-powers lose smoothness
        r = np.hypot(pts[:, 0], pts[:, 1])
        pts = pts[r > margin]
    return pts


# hand-derived Hessians, independent of the hyper-dual code
def hess_test1(p):
    x, y = p[:, 0], p[:, 1]
    pi = np.pi
    S = np.sin(2 * pi * x) * np.sin(pi * y)
    Sx = 2 * pi * np.cos(2 * pi * x) * np.sin(pi * y)
    Sy = pi * np.sin(2 * pi * x) * np.cos(pi * y)
    Sxx = -4 * pi**2 * S
    Syy = -pi**2 * S
    Sxy = 2 * pi**2 * np.cos(2 * pi * x) * np.cos(pi * y)
    E = np.exp(x * np.cos(y))
    Ex = np.cos(y) * E
    Ey = -x * np.sin(y) * E
    Exx = np.cos(y) ** 2 * E
    Exy = -np.sin(y) * E - x * np.sin(y) * np.cos(y) * E
    Eyy = -x * np.cos(y) * E + x**2 * np.sin(y) ** 2 * E
    H = np.empty((len(x), 2, 2))
    H[:, 0, 0] = Sxx * E + 2 * Sx * Ex + S * Exx
    H[:, 1, 1] = Syy * E + 2 * Sy * Ey + S * Eyy
    H[:, 0, 1] = H[:, 1, 0] = Sxy * E + Sx * Ey + Sy * Ex + S * Exy
    return H


def hess_radial(p, a=1.75):
    r2 = np.sum(p**2, axis=1)
    c = a * r2 ** ((a - 2) / 2)
    outer = np.einsum("ni,nj->nij", p, p) / r2[:, None, None]
    return c[:, None, None] * (np.eye(2) + (a - 2) * outer)


def hess_test3(p):
    H = np.zeros((len(p), 2, 2))
    H[:, 0, 0] = (4 / 9) * p[:, 0] ** (-2 / 3)
    H[:, 1, 1] = -(4 / 9) * p[:, 1] ** (-2 / 3)
    return H


def hess_sinsin(p):
    x, y = np.pi * p[:, 0], np.pi * p[:, 1]
    H = np.empty((len(p), 2, 2))
    H[:, 0, 0] = H[:, 1, 1] = -np.pi**2 * np.sin(x) * np.sin(y)
    H[:, 0, 1] = H[:, 1, 0] = np.pi**2 * np.cos(x) * np.cos(y)
    return H


def hess_poly(p):
    H = np.zeros((len(p), 2, 2))
    H[:, 0, 1] = H[:, 1, 0] = 1.0
    return H


HAND_HESS = {
    "test1": hess_test1,
    "test2": hess_radial,
    "test3": hess_test3,
    "smooth": hess_sinsin,
    "laplace": hess_sinsin,
    "manufactured_poly": hess_poly,
}


class TestRegistry:
    def test_ids(self):
        for name in ("test1", "test2", "test3", "smooth", "manufactured_poly"):
            assert name in PROBLEM_IDS
            assert problem(name).name == name

    def test_unknown(self):
        with pytest.raises(KeyError):
            problem("test4")

    def test_domains(self):
        assert problem("test1").domain == (-0.5, 0.5, -0.5, 0.5)
        assert problem("test2").domain == (0.0, 0.5, 0.0, 0.5)
        assert problem("test3").domain == (0.0, 1.0, 0.0, 1.0)

    def test_rate_metadata(self):
        assert problem("test1").expected_rates == {"w1p": "k", "hess": "k-1"}
        assert problem("test3").expected_rates == {"lp": "4/3", "w1p": "5/6"}

    def test_smoothness_tags(self):
        assert problem("test1").A.smoothness == "holder"
        assert problem("test2").A.smoothness == "uniformly_continuous"
        assert problem("test3").A.smoothness == "degenerate"
        assert problem("smooth").A.smoothness == "smooth"


class TestCoefficientExamples:
    def test_test3_source_is_zero(self, rng):
        spec = problem("test3")
        pts = rng.uniform(0, 1, size=(50, 2))
        assert np.all(spec.f(pts) == 0.0)

    def test_test1_identity_at_origin(self):
        np.testing.assert_allclose(TEST1_A([[0.0, 0.0]])[0], np.eye(2), atol=1e-6)

    def test_test2_at_inverse_e(self):
        r = math.exp(-1)
        p = np.array([[r * math.cos(0.3), r * math.sin(0.3)]])
        np.testing.assert_allclose(TEST2_A(p)[0], [[20, 1], [1, 4]], rtol=1e-14)

    def test_test2_limit_at_origin(self):
        np.testing.assert_array_equal(TEST2_A([[0.0, 0.0]])[0], [[15, 1], [1, 3]])

    def test_smooth_divergence(self, rng):
        A = problem("smooth").A
        p = rng.uniform(0, 1, size=(20, 2))
        h = 1e-6
        fd = np.zeros((20, 2))
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            # row i of A differentiated in x_i, summed over i, gives column-wise divergence
            fd += (A(p + e)[:, i, :] - A(p - e)[:, i, :]) / (2 * h)
        np.testing.assert_allclose(A.div(p), fd, atol=1e-8)

    @pytest.mark.parametrize("name", ["test1", "test2", "test3", "smooth", "laplace"])
    def test_symmetric_and_bounded(self, name, rng):
        spec = problem(name)
        x0, x1, y0, y1 = spec.domain
        p = np.column_stack([rng.uniform(x0, x1, 1000), rng.uniform(y0, y1, 1000)])
        A = spec.A(p)
        assert np.array_equal(A, np.swapaxes(A, 1, 2))
        ev = np.linalg.eigvalsh(A)
        assert ev.min() >= spec.A.lam - 1e-12
        assert ev.max() <= spec.A.Lam + 1e-12

    def test_test3_degenerate(self, rng):
        A = TEST3_A(rng.uniform(0, 1, size=(1000, 2)))
        assert np.max(np.abs(np.linalg.det(A))) <= 1e-12
        assert TEST3_A.lam == 0.0

    def test_constant_field(self):
        A = CoefficientField.constant([[2.0, 0.5], [0.5, 1.0]])
        assert A.smoothness == "constant"
        assert A([[0.1, 0.2], [0.3, 0.4]]).shape == (2, 2, 2)
        with pytest.raises(ValueError):
            CoefficientField.constant([[1.0, 0.2], [0.0, 1.0]])

    def test_scaled(self):
        A = TEST1_A.scaled(2.0)
        p = np.array([[0.1, -0.2]])
        np.testing.assert_allclose(A(p), 2 * TEST1_A(p))
        assert A.lam == pytest.approx(2 * TEST1_A.lam)


class TestHyperDual:
    def test_polynomial_example(self):
        v, g, H = hd.hd_derivatives(lambda x, y: x * x * y, [1.0, 2.0])
        assert v == 2.0
        np.testing.assert_array_equal(g, [4.0, 1.0])
        np.testing.assert_array_equal(H, [[4.0, 2.0], [2.0, 0.0]])

    def test_sine(self):
        _, _, H = hd.hd_derivatives(lambda x, y: hd.sin(x), [np.pi / 2, 0.0])
        assert H[0, 0] == pytest.approx(-1.0, abs=1e-15)

    def test_radial_power_gradient_fd(self):
        def u(x, y):
            return hd.sqrt(x * x + y * y) ** 1.75

        p = np.array([0.3, 0.4])
        _, g, _ = hd.hd_derivatives(u, p)
        f = lambda q: np.hypot(*q) ** 1.75  # noqa: E731
        h = 1e-5
        fd = [(f(p + h * e) - f(p - h * e)) / (2 * h) for e in np.eye(2)]
        np.testing.assert_allclose(g, fd, rtol=1e-6)

    def test_constants_have_no_derivative(self):
        x = hd.HyperDual(2.0, 1.0, 1.0, 0.0)
        c = (x * 0 + 3.0) - x * 0
        assert (c.b, c.c, c.d) == (0.0, 0.0, 0.0)

    def test_mixed_of_product(self):
        _, _, H = hd.hd_derivatives(lambda x, y: x * y, [0.7, -0.2])
        assert H[0, 1] == 1.0 and H[1, 0] == 1.0

    def test_abs_kink_raises(self):
        with pytest.raises(hd.DomainError):
            hd.hd_derivatives(lambda x, y: hd.fabs(x), [0.0, 1.0])

    def test_fractional_power_of_zero_raises(self):
        with pytest.raises(hd.DomainError):
            hd.hd_derivatives(lambda x, y: x ** (4 / 3), [0.0, 0.5])

    def test_log_nonpositive_raises(self):
        with pytest.raises(hd.DomainError):
            hd.hd_derivatives(lambda x, y: hd.log(x), [-1.0, 0.5])

    @settings(max_examples=60, deadline=None)
    @given(st.floats(0.1, 2.0), st.floats(-2.0, 2.0))
    def test_quotient_rule(self, x, y):
        def u(a, b):
            return hd.exp(b) / (1 + a * a)

        _, g, H = hd.hd_derivatives(u, [x, y])
        d = 1 + x * x
        assert g[0] == pytest.approx(-2 * x * math.exp(y) / d**2, rel=1e-12)
        assert g[1] == pytest.approx(math.exp(y) / d, rel=1e-12)
        assert H[0, 1] == pytest.approx(-2 * x * math.exp(y) / d**2, rel=1e-12)
        assert H[0, 0] == pytest.approx(math.exp(y) * (6 * x * x - 2) / d**3, rel=1e-10, abs=1e-12)


@pytest.mark.parametrize("name", PROBLEM_IDS)
def test_ad_matches_finite_differences(name, rng):
    spec = problem(name)
    pts = interior_points(spec, 200, rng)
    h = 1e-5
    _, g, H = spec.exact_derivatives(pts)
    fd_g = np.empty_like(g)
    fd_H = np.empty_like(H)
    for i, e in enumerate(np.eye(2)):
        fd_g[:, i] = (spec.exact_value(pts + h * e) - spec.exact_value(pts - h * e)) / (2 * h)
        fd_H[:, :, i] = (spec.exact_gradient(pts + h * e) - spec.exact_gradient(pts - h * e)) / (2 * h)
    gscale = np.maximum(np.linalg.norm(g, axis=1), 1.0)
    hscale = np.maximum(np.linalg.norm(H, axis=(1, 2)), 1.0)
    assert np.all(np.linalg.norm(fd_g - g, axis=1) <= 1e-5 * gscale)
    assert np.all(np.linalg.norm(fd_H - H, axis=(1, 2)) <= 1e-5 * hscale)


@pytest.mark.parametrize("name", PROBLEM_IDS)
def test_hessian_matches_hand_derivation(name, rng):
    spec = problem(name)
    pts = interior_points(spec, 200, rng)
    H = spec.exact_hessian(pts)
    ref = HAND_HESS[name](pts)
    np.testing.assert_allclose(H, ref, rtol=1e-10, atol=1e-10 * np.abs(ref).max())


@pytest.mark.parametrize("name", PROBLEM_IDS)
def test_pde_residual(name, rng):
    spec = problem(name)
    pts = interior_points(spec, 1000, rng)
    lhs = -np.einsum("nij,nij->n", spec.A(pts), HAND_HESS[name](pts))
    f = spec.f(pts)
    scale = np.maximum(np.abs(lhs), 1.0)
    assert np.all(np.abs(lhs - f) <= 1e-8 * scale)


def test_test3_residual_is_roundoff(rng):
    spec = problem("test3")
    pts = interior_points(spec, 1000, rng)
    r = rhs_eval(spec, pts)
    assert np.max(np.abs(r)) <= 1e-12 * np.max(np.abs(spec.exact_hessian(pts)))
    assert rhs_eval(spec, [0.5, 0.5]) == pytest.approx(0.0, abs=1e-14)


def test_manufactured_source(rng):
    spec = problem("manufactured_poly")
    pts = rng.uniform(-0.5, 0.5, size=(100, 2))
    np.testing.assert_allclose(spec.f(pts), 2 * np.hypot(pts[:, 0], pts[:, 1]) ** 0.5, rtol=1e-12)


def test_laplacian_of_paraboloid():
    spec = ProblemSpec("p", (0, 1, 0, 1), CoefficientField.constant(np.eye(2)),
                       lambda x, y: x * x + y * y)
    assert rhs_eval(spec, [0.3, 0.7]) == pytest.approx(-4.0, abs=1e-14)


@pytest.mark.parametrize("name", PROBLEM_IDS)
def test_boundary_data_is_exact_solution(name):
    spec = problem(name)
    x0, x1, y0, y1 = spec.domain
    t = np.linspace(0, 1, 11)
    pts = np.concatenate([
        np.column_stack([x0 + t * (x1 - x0), np.full_like(t, y0)]),
        np.column_stack([np.full_like(t, x1), y0 + t * (y1 - y0)]),
    ])
    np.testing.assert_array_equal(spec.boundary_g(pts), spec.exact_value(pts))
