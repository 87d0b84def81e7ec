import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import integrate, special

from gammaratio import specfun
from gammaratio.specfun import (Accuracy, DomainError, RangeError, binet_density, digamma,
                                lgamma, polygamma)


def bernoulli_by_recurrence(count):
    """B_0..B_count from sum_{k<=n} C(n+1, k) B_k = 0, exact rationals."""
    b = [Fraction(1)]
    for n in range(1, count + 1):
        b.append(-sum(math.comb(n + 1, k) * b[k] for k in range(n)) / (n + 1))
    return b


def zeta_em(s, n=1000):
    """Partial sum plus Euler-Maclaurin tail; error far below 1e-15 for s >= 2."""
    head = math.fsum(k**-s for k in range(1, n))
    return head + n ** (1 - s) / (s - 1) + 0.5 * n**-s + s / 12 * n ** (-s - 1)


def lgamma_limit(z, n):
    """ln of n! n^z / (z)_{n+1}, the defining limit truncated at n."""
    return (math.fsum(math.log(k) for k in range(1, n + 1)) + z * math.log(n)
            - math.fsum(math.log(z + k) for k in range(n + 1)))


def test_bernoulli_table_matches_recurrence():
    b = bernoulli_by_recurrence(40)
    assert specfun._BERNOULLI_EXACT == tuple(b[2:41:2])


class TestLgamma:
    def test_one(self):
        assert lgamma(1.0) == pytest.approx(0.0, abs=1e-15)

    def test_five(self):
        assert abs(lgamma(5.0) - math.log(math.factorial(4))) <= 1e-13

    def test_half(self):
        assert abs(lgamma(0.5) - 0.5 * math.log(math.pi)) <= 1e-14

    def test_half_against_limit_definition(self):
        # truncation error of the limit is about z(z+1)/(2n)
        assert abs(lgamma_limit(0.5, 10**6) - lgamma(0.5)) < 1e-6

    @pytest.mark.parametrize("n", range(1, 30))
    def test_factorials(self, n):
        assert lgamma(n + 1.0) == pytest.approx(math.log(math.factorial(n)), rel=1e-14,
                                                abs=1e-15)

    def test_against_scipy(self):
        x = np.geomspace(1e-8, 1e8, 4001)
        ref = special.gammaln(x)
        assert np.all(np.abs(lgamma(x) - ref) <= 1e-13 * np.maximum(1.0, np.abs(ref)))

    @pytest.mark.parametrize("x", [1.0, 2.0, 5.0, 10.0, 50.0])
    def test_binet_cross_check(self, x):
        q, _ = integrate.quad(lambda s: binet_density(s) * math.exp(-x * s), 0, 50.0 / x * 4,
                              epsabs=1e-14, limit=200)
        stirling = (x + 0.5) * math.log(x) - x + 0.5 * math.log(2 * math.pi)
        assert abs(lgamma(x + 1.0) - (stirling + q)) <= 1e-9

    def test_scalar_in_scalar_out(self):
        assert isinstance(lgamma(3.0), float)
        assert lgamma(np.array([3.0])).shape == (1,)

    @pytest.mark.parametrize("bad", [0.0, -1.0, -0.5, float("nan")])
    def test_domain(self, bad):
        with pytest.raises(DomainError):
            lgamma(bad)

    def test_range(self):
        with pytest.raises(RangeError):
            lgamma(1e301)
        assert math.isfinite(lgamma(1e300))


class TestDigamma:
    def test_one_is_minus_euler_gamma(self):
        assert abs(digamma(1.0) + 0.5772156649015329) <= 1e-12

    def test_two(self):
        assert abs(digamma(2.0) - (1.0 - specfun.EULER_GAMMA)) <= 1e-14

    def test_log_asymptote(self):
        assert abs(digamma(1e6) - math.log(1e6)) < 1e-6

    def test_against_scipy(self):
        x = np.geomspace(1e-8, 1e8, 4001)
        ref = special.digamma(x)
        assert np.all(np.abs(digamma(x) - ref) <= 1e-13 * np.maximum(1.0, np.abs(ref)))

    def test_recurrence(self, rng):
        x = rng.uniform(0, 100, 10_000) + 1e-12
        lhs = digamma(x + 1) - digamma(x) - 1.0 / x
        assert np.all(np.abs(lhs) <= 1e-11 * np.maximum(1.0, np.abs(digamma(x))))

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 10.0])
    def test_derivative_of_lgamma(self, x):
        step = 1e-5
        fd = (lgamma(x + step) - lgamma(x - step)) / (2 * step)
        assert abs(fd - digamma(x)) < 1e-6


class TestPolygamma:
    def test_trigamma_one(self):
        assert abs(polygamma(1, 1.0) - zeta_em(2)) <= 1e-12
        assert abs(polygamma(1, 1.0) - math.pi**2 / 6) <= 1e-12

    def test_tetragamma_one(self):
        assert abs(polygamma(2, 1.0) + 2 * zeta_em(3)) <= 1e-12

    @pytest.mark.parametrize("n", range(1, 9))
    def test_integer_points_against_zeta(self, n):
        # psi^(n)(1) = (-1)^(n+1) n! zeta(n+1)
        expected = (-1) ** (n + 1) * math.factorial(n) * zeta_em(n + 1)
        assert polygamma(n, 1.0) == pytest.approx(expected, rel=1e-13)

    @pytest.mark.parametrize("x", [0.1, 1.0, 10.0, 100.0])
    def test_trigamma_positive(self, x):
        assert polygamma(1, x) > 0

    @pytest.mark.parametrize("n", range(1, 7))
    def test_recurrence(self, rng, n):
        x = rng.uniform(0, 100, 10_000) + 1e-12
        here = polygamma(n, x)
        step = (-1) ** n * math.factorial(n) / x ** (n + 1)
        diff = polygamma(n, x + 1) - here - step
        assert np.all(np.abs(diff) <= 1e-11 * np.maximum(1.0, np.abs(here)))

    @pytest.mark.parametrize("n", range(1, 9))
    def test_sign_and_scipy(self, n):
        x = np.geomspace(1e-6, 1e6, 1001)
        val = polygamma(n, x)
        assert np.all(np.sign(val) == (-1) ** (n + 1))
        assert np.allclose(val, special.polygamma(n, x), rtol=1e-13, atol=0)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_integral_representation(self, n):
        x = 1.7
        q, _ = integrate.quad(lambda t: t**n * math.exp(-x * t) / -math.expm1(-t), 0, np.inf,
                              epsabs=1e-14, epsrel=1e-13)
        assert polygamma(n, x) == pytest.approx((-1) ** (n + 1) * q, rel=1e-11)

    @pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 10.0])
    def test_derivative_of_digamma(self, x):
        step = 1e-5
        fd = (digamma(x + step) - digamma(x - step)) / (2 * step)
        assert abs(fd - polygamma(1, x)) < 1e-5

    @pytest.mark.parametrize("order", [0, -1, 1.5, True])
    def test_bad_order(self, order):
        with pytest.raises(DomainError):
            polygamma(order, 1.0)


class TestBinetDensity:
    def test_small_t_limit(self):
        assert binet_density(1e-12) == pytest.approx(1 / 12, rel=1e-15)
        assert binet_density(1e-3) == pytest.approx(1 / 12 - 1e-6 / 720, rel=1e-14)

    def test_one(self):
        assert binet_density(1.0) == pytest.approx(1 / (math.e - 1) - 1 + 0.5, rel=1e-14)

    def test_decreasing(self):
        v = [binet_density(t) for t in (0.1, 1.0, 10.0)]
        assert v[0] > v[1] > v[2] > 0

    def test_continuous_across_series_switch(self):
        below, above = binet_density(np.nextafter(1.0, 0)), binet_density(1.0)
        assert below == pytest.approx(above, rel=1e-14)

    def test_matches_extended_precision(self):
        import mpmath
        mpmath.mp.dps = 40
        for t in np.geomspace(1e-6, 40, 60):
            tm = mpmath.mpf(t)
            ref = float((1 / mpmath.expm1(tm) - 1 / tm + mpmath.mpf(1) / 2) / tm)
            assert binet_density(t) == pytest.approx(ref, rel=1e-13)


class TestExpm1Recip:
    def test_log2(self):
        assert specfun.expm1_recip(math.log(2)) == pytest.approx(1.0, rel=1e-15)

    def test_small(self):
        assert abs(specfun.expm1_recip(1e-8) - (1e8 - 0.5)) < 1e-6

    def test_large_no_overflow(self):
        assert specfun.expm1_recip(1000.0) == 0.0


def test_accuracy_validation():
    with pytest.raises(ValueError):
        Accuracy(rel_tol=0)
    with pytest.raises(ValueError):
        Accuracy(shift_threshold=1.0)
    with pytest.raises(ValueError):
        Accuracy(max_bernoulli_terms=3)


def test_custom_shift_threshold_agrees():
    acc = Accuracy(shift_threshold=20.0)
    x = np.geomspace(0.01, 50, 200)
    assert np.allclose(lgamma(x, acc), lgamma(x), rtol=1e-14, atol=1e-13)
    assert np.allclose(polygamma(3, x, acc), polygamma(3, x), rtol=1e-13)
