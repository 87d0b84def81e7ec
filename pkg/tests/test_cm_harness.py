import math

import numpy as np
import pytest

from gammaratio import cm_harness as cm
from gammaratio import ratio
from gammaratio.ratio import RatioConfig

from conftest import nondegenerate_config, random_ratio_config

GRID = np.geomspace(0.1, 100, 40)


def exp_neg(t, k):
    return (-1) ** k * math.exp(-t)


def reciprocal(t, k):
    # d^k/dt^k 1/t = (-1)^k k! / t^(k+1)
    return (-1) ** k * math.factorial(k) / t ** (k + 1)


def expm1_reciprocal(t, k):
    # 1/(e^t - 1) = sum_{j>=1} e^{-jt}; derivatives termwise, truncated far below eps
    j = np.arange(1, 2000)
    return float(np.sum((-j) ** k * np.exp(-j * t)))


def identity(t, k):
    return (t, 1.0, 0.0)[k] if k < 3 else 0.0


def log1p_fn(t, k):
    if k == 0:
        return math.log1p(t)
    return (-1) ** (k - 1) * math.factorial(k - 1) / (1 + t) ** k


def neg_exp(t, k):
    return -exp_neg(t, k)


class TestCheckCM:
    @pytest.mark.parametrize("handle", [exp_neg, reciprocal, expm1_reciprocal])
    def test_known_cm_functions(self, handle):
        rep = cm.check_cm(handle, 6, GRID)
        assert rep.passed and rep.verdict == "pass"
        assert all(s >= 0 for s in rep.min_slack_per_order)
        assert rep.orders == tuple(range(7)) and rep.max_order == 6

    def test_identity_fails_at_first_order(self):
        rep = cm.check_cm(identity, 4, GRID)
        assert rep.failed_orders == (1,)
        assert rep.slack(1) == -1.0
        assert rep.first_failure[0] == 1

    def test_log1p_fails_from_first_order(self):
        # (-1)^k d^k ln(1+t) = -(k-1)!/(1+t)^k < 0 for every k >= 1
        rep = cm.check_cm(log1p_fn, 5, GRID)
        assert rep.failed_orders == (1, 2, 3, 4, 5)

    def test_negative_exp_fails_everywhere(self):
        rep = cm.check_cm(neg_exp, 4, GRID)
        assert rep.failed_orders == (0, 1, 2, 3, 4)
        assert rep.first_failure[:2] == (0, GRID[0])

    def test_slack_and_worst_point(self):
        rep = cm.check_cm(exp_neg, 2, GRID)
        # (-1)^k f^(k) = e^{-t}, smallest at the right end
        assert rep.slack(0) == pytest.approx(math.exp(-100))
        assert rep.worst_t_per_order == (GRID[-1],) * 3

    def test_tolerance_scales_with_value(self):
        # near-zero sign violations below tol * max(1, |v|) are tolerated
        tiny = lambda t, k: -1e-5 if k == 0 else 0.0  # noqa: E731
        assert cm.check_cm(tiny, 1, [1.0], tol=1e-4).passed
        assert cm.check_cm(tiny, 1, [1.0], tol=1e-6).failed_orders == (0,)
        big = lambda t, k: 1e6 if k == 1 else 1.0  # noqa: E731
        assert cm.check_cm(big, 1, [1.0], tol=0.1).failed_orders == (1,)

    def test_default_grid(self):
        g = cm.default_grid()
        assert len(g) == 50 and g[0] == pytest.approx(1e-3) and g[-1] == pytest.approx(1e3)
        assert np.all(np.diff(np.log(g)) == pytest.approx(np.log(1e6) / 49))
        rep = cm.check_cm(exp_neg, 1)
        assert len(rep.grid) == 50

    def test_handle_error_has_context(self):
        def bad(t, k):
            if t > 1:
                raise ZeroDivisionError("boom")
            return 1.0
        with pytest.raises(cm.HandleError, match=r"t=.*order 0"):
            cm.check_cm(bad, 2, GRID)

    def test_deterministic(self):
        c = RatioConfig.from_rows([[0.3, 0.8], [0.5, 0.1]], 1.3)
        handle = lambda t, k: ratio.dklog_f(c, t, k + 2)  # noqa: E731
        assert cm.check_cm(handle, 6) == cm.check_cm(handle, 6)

    def test_to_dict(self):
        d = cm.check_cm(identity, 2, GRID).to_dict()
        assert d["verdict"] == "fail" and d["failed_orders"] == [1]
        assert d["grid"] == [GRID[0], GRID[-1], len(GRID)]

    def test_ratio_second_log_derivative(self, rng):
        for _ in range(10):
            c = random_ratio_config(rng, rho_range=(-1.0, 2.0))
            rep = cm.check_cm(lambda t, k: ratio.dklog_f(c, t, k + 2), 6)
            assert rep.passed


def bernstein_canonical(t, k):
    # 1 - e^{-t}
    return -math.expm1(-t) if k == 0 else (-1) ** (k - 1) * math.exp(-t)


class TestCheckBernstein:
    def test_canonical(self):
        assert cm.check_bernstein(bernstein_canonical, 6, GRID).passed

    def test_signs(self):
        rep = cm.check_bernstein(bernstein_canonical, 3, GRID)
        assert rep.kind == "bernstein"
        assert all(s > 0 for s in rep.min_slack_per_order)

    def test_negative_function_fails(self):
        rep = cm.check_bernstein(lambda t, k: bernstein_canonical(t, k) - (k == 0), 2, GRID)
        assert rep.failed_orders == (0,)

    def test_ratio_rho_two(self, rng):
        for _ in range(10):
            c = nondegenerate_config(rng, rho=2.0)
            rep = cm.check_bernstein(lambda t, k: ratio.dklog_f(c, t, k + 1), 6)
            assert rep.passed

    def test_ratio_rho_one_fails_near_zero(self):
        c = RatioConfig.from_rows([[1.0, 1.0]], 1.0)
        rep = cm.check_bernstein(lambda t, k: ratio.dklog_f(c, t, k + 1), 6)
        assert rep.failed_orders == (0,)
        assert rep.worst_t_per_order[0] == rep.grid[0]
        # approaches the limit -gamma (2 - rho) sum lambda = -2 gamma
        assert rep.slack(0) == pytest.approx(ratio.dlog_f(c, 1e-3), rel=1e-15)
        fine = cm.check_bernstein(lambda t, k: ratio.dklog_f(c, t, k + 1), 0,
                                  cm.default_grid(50, 1e-7, 1e3))
        assert fine.slack(0) == pytest.approx(-2 * 0.5772156649015329, abs=1e-5)


class TestCheckLogCM:
    def test_constant(self):
        rep = cm.check_log_cm(lambda t, k: 0.0, 6, GRID)
        assert rep.passed and rep.orders == tuple(range(1, 7))

    def test_exp_neg_ratio_derivative_passes(self):
        # g = exp(-[ln f2]') has ln g = -[ln f2]', whose derivatives alternate
        c = RatioConfig.from_rows([[1.0, 2.0], [3.0, 4.0]], 2.0)
        rep = cm.check_log_cm(lambda t, k: -ratio.dklog_f(c, t, k + 1), 6)
        assert rep.passed

    def test_reciprocal_of_ratio_fails_at_second_order(self):
        # ln(1/f2) = -ln f2 is concave, so (-1)^2 [ln(1/f2)]'' < 0
        c = RatioConfig.from_rows([[1.0, 2.0], [3.0, 4.0]], 2.0)
        rep = cm.check_log_cm(lambda t, k: -ratio.dklog_f(c, t, k), 6)
        assert 1 not in rep.failed_orders
        assert rep.failed_orders[0] == 2

    def test_ratio_itself_fails_at_first_order(self):
        c = RatioConfig.from_rows([[1.0, 1.0]], 2.0)
        rep = cm.check_log_cm(lambda t, k: ratio.dklog_f(c, t, k), 4)
        assert rep.first_failure[0] == 1

    def test_exp_neg_is_log_cm(self):
        # ln e^{-t} = -t
        rep = cm.check_log_cm(lambda t, k: -1.0 if k == 1 else 0.0, 6, GRID)
        assert rep.passed


class TestLogConvex:
    def test_constant(self):
        rep = cm.check_log_convex(lambda t: 3.0, GRID)
        assert rep.passed and rep.worst_slack == 0.0

    def test_concave_fails(self):
        rep = cm.check_log_convex(math.log, GRID)
        assert not rep.passed and rep.worst_slack < 0
        assert rep.to_dict()["verdict"] == "fail"

    @pytest.mark.parametrize("rho", [2.0, 1.0])
    def test_ratio(self, rho):
        c = RatioConfig.from_rows([[0.5, 1.5], [2.0, 0.25]], rho)
        rep = cm.check_log_convex(lambda t: ratio.log_f(c, t), cm.default_grid(30))
        assert rep.passed

    def test_worst_pair_reported(self):
        rep = cm.check_log_convex(lambda t: -t * t, [1.0, 2.0, 4.0])
        # slack = -(a^2+b^2)/2 + ((a+b)/2)^2 = -(a-b)^2/4, worst for (1, 4)
        assert rep.worst_pair == (1.0, 4.0)
        assert rep.worst_slack == -2.25
