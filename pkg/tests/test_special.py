import math

import mpmath
import numpy as np
import pytest
import scipy.integrate
import scipy.special
from hypothesis import given, settings
from hypothesis import strategies as st

from fraciga.errors import DomainError
from fraciga.special import (
    check_order,
    erfc,
    gamma,
    jacobi_p,
    normalization_constant,
    window_moment,
    window_rho,
)

RHO = np.polynomial.Polynomial([1, 0, 0, 0, -35, 84, -70, 20])


class TestGammaErfc:
    @pytest.mark.parametrize("x", [0.2, 0.5, 1.0, 1.8, 2.8, 7.25, -0.5, -2.3])
    def test_gamma_vs_mpmath(self, x):
        assert gamma(x) == pytest.approx(float(mpmath.gamma(x)), rel=1e-14)

    @pytest.mark.parametrize("x", [0, -1, -4])
    def test_gamma_poles(self, x):
        with pytest.raises(DomainError):
            gamma(x)

    def test_erfc(self):
        assert erfc(0.0) == 1.0
        assert erfc(1.0) == pytest.approx(0.157299207050285, rel=1e-14)


class TestNormalizationConstant:
    def test_half(self):
        assert abs(normalization_constant(0.5) - 1.0 / (2 * math.pi)) <= 1e-12

    @pytest.mark.parametrize("s", [0.1, 0.3, 0.8, 0.95])
    def test_vs_gamma_of_minus_s(self, s):
        ref = 4**s * float(mpmath.gamma(1 + s)) / (math.pi * abs(float(mpmath.gamma(-s))))
        assert normalization_constant(s) == pytest.approx(ref, rel=1e-13)

    @pytest.mark.parametrize("s", [0.0, 1.0, -0.2, 1.5])
    def test_order_range(self, s):
        with pytest.raises(DomainError):
            check_order(s)


class TestJacobi:
    @settings(max_examples=100, deadline=None)
    @given(n=st.integers(0, 12), alpha=st.floats(-0.9, 3.0), beta=st.floats(-0.9, 3.0),
           x=st.floats(-1.0, 1.0))
    def test_vs_scipy(self, n, alpha, beta, x):
        ref = scipy.special.eval_jacobi(n, alpha, beta, x)
        assert jacobi_p(n, alpha, beta, x) == pytest.approx(ref, rel=1e-11, abs=1e-11)

    def test_vectorized(self):
        x = np.linspace(-1, 1, 7)
        np.testing.assert_allclose(jacobi_p(3, 0.8, 0.0, x),
                                   scipy.special.eval_jacobi(3, 0.8, 0.0, x), rtol=1e-13)

    def test_endpoint(self):
        # P_n^{(a,b)}(1) = binom(n + a, n)
        assert jacobi_p(4, 0.5, 0.0, 1.0) == pytest.approx(float(mpmath.binomial(4.5, 4)), rel=1e-13)

    @pytest.mark.parametrize("n, alpha", [(-1, 0.0), (1.5, 0.0), (2, -1.0)])
    def test_invalid(self, n, alpha):
        with pytest.raises(DomainError):
            jacobi_p(n, alpha, 0.0, 0.2)


class TestWindow:
    @pytest.mark.parametrize("a", [0.1, 1.0, 2.5])
    def test_identities(self, a):
        assert window_rho(0.0, a) == 1.0
        assert window_rho(a, a) == 0.0
        assert window_rho(a / 2, a) == pytest.approx(0.5, abs=1e-15)
        for k in (1, 2, 3):
            assert abs(RHO.deriv(k)(1.0)) <= 1e-12
        # 1 - O(r^4) at the origin
        assert all(RHO.deriv(k)(0.0) == 0 for k in (1, 2, 3))

    def test_vanishes_outside(self):
        np.testing.assert_array_equal(window_rho(np.array([0.2, 0.5]), 0.1), [0.0, 0.0])

    def test_matches_polynomial(self):
        r = np.linspace(0, 1, 50)
        np.testing.assert_allclose(window_rho(r[:-1], 1.0), RHO(r[:-1]), atol=1e-14)

    @pytest.mark.parametrize("a, s", [(0.1, 0.8), (0.1, 0.5), (1.0, 0.2), (0.3, 0.95)])
    def test_moment_vs_quadrature(self, a, s):
        ref, _ = scipy.integrate.quad(lambda r: window_rho(r, a) * r ** (1 - 2 * s), 0, a,
                                      epsabs=1e-15, epsrel=1e-13, limit=200)
        assert abs(window_moment(a, s) - ref) <= 1e-10

    def test_moment_bad_window(self):
        with pytest.raises(DomainError):
            window_moment(0.0, 0.5)
