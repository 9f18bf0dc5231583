import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fraciga.errors import DomainError, ResourceError
from fraciga.quadrature import coefficient_A, coefficient_B, gauss_legendre, polar_rule
from fraciga.special import window_moment


class TestGaussLegendre:
    @pytest.mark.parametrize("n", [1, 2, 3, 10, 57, 200])
    def test_vs_numpy(self, n):
        x, w = gauss_legendre(n)
        xr, wr = np.polynomial.legendre.leggauss(n)
        np.testing.assert_allclose(x, xr, atol=1e-14)
        np.testing.assert_allclose(w, wr, atol=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 5, 12, 30])
    def test_exactness(self, n):
        x, w = gauss_legendre(n)
        for k in range(2 * n):
            exact = 0.0 if k % 2 else 2.0 / (k + 1)
            assert abs(np.dot(w, x**k) - exact) <= 1e-13

    @settings(max_examples=40, deadline=None)
    @given(n=st.integers(1, 40), lo=st.floats(-5, 5), width=st.floats(0.1, 10))
    def test_interval_mapping(self, n, lo, width):
        x, w = gauss_legendre(n, lo, lo + width)
        assert w.sum() == pytest.approx(width, rel=1e-13)
        assert np.all(np.diff(x) > 0) and x[0] > lo and x[-1] < lo + width

    def test_symmetry(self):
        x, w = gauss_legendre(101)
        np.testing.assert_allclose(x, -x[::-1], atol=1e-15)
        np.testing.assert_allclose(w, w[::-1], rtol=1e-15)
        assert x[50] == 0.0

    def test_large_rule(self):
        x, w = gauss_legendre(5000, 0.0, 20.0)
        assert w.sum() == pytest.approx(20.0, rel=1e-13)
        assert x[0] > 0

    @pytest.mark.parametrize("n, exc", [(0, DomainError), (10**7, ResourceError)])
    def test_invalid(self, n, exc):
        with pytest.raises(exc):
            gauss_legendre(n)

    def test_empty_interval(self):
        with pytest.raises(DomainError):
            gauss_legendre(4, 1.0, 1.0)


class TestPolarRule:
    def test_disk_area(self):
        rule = polar_rule(50, 12, 3.0)
        assert rule.integrate(lambda y: np.ones(len(y))) == pytest.approx(9 * math.pi, rel=1e-14)

    def test_gaussian(self):
        rule = polar_rule(200, 16, 10.0)
        val = rule.integrate(lambda y: np.exp(-np.sum(y**2, axis=1)))
        assert val == pytest.approx(math.pi, rel=1e-13)

    def test_angular_trig_exactness(self):
        rule = polar_rule(20, 7, 1.0)
        val = rule.integrate(lambda y: y[:, 0] ** 2)
        assert val == pytest.approx(math.pi / 4, rel=1e-13)

    def test_shapes(self):
        rule = polar_rule(5, 4, 2.0)
        assert rule.offsets.shape == (5, 4, 2)
        assert rule.weights.shape == (5, 4)
        np.testing.assert_allclose(rule.angles[-1], 2 * math.pi)

    @pytest.mark.parametrize("m, R", [(2, 1.0), (8, 0.0)])
    def test_invalid(self, m, R):
        with pytest.raises(DomainError):
            polar_rule(10, m, R)


class TestCoefficients:
    def test_A_formula(self):
        rule = polar_rule(30, 8, 20.0)
        s = 0.8
        ref = 2 * math.pi * sum(w / r ** (1 + 2 * s) for r, w in zip(rule.radii, rule.radial_weights))
        assert coefficient_A(rule, s) == pytest.approx(ref, rel=1e-13)

    def test_A_grows(self):
        assert coefficient_A(polar_rule(2000, 8, 20.0), 0.8) > coefficient_A(polar_rule(500, 8, 20.0), 0.8)

    def test_B_decreases(self):
        vals = [abs(coefficient_B(polar_rule(n, 8, 20.0), 0.8, 0.1)) for n in (100, 400, 1600)]
        assert vals[0] > vals[1] > vals[2]

    def test_B_is_quadrature_error(self):
        # with a fine rule on [0, a] the discrete moment matches the closed form
        rule = polar_rule(400, 8, 0.1)
        B = coefficient_B(rule, 0.5, 0.1)
        assert abs(B) <= 1e-10 * math.pi * window_moment(0.1, 0.5) + 1e-14

    def test_B_window_beyond_R(self):
        with pytest.raises(DomainError):
            coefficient_B(polar_rule(10, 8, 1.0), 0.5, 2.0)
