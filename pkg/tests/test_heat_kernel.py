import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import integrate as sci_integrate
from scipy import special

from oracles import composite_gauss_theta0, quadpack_substituted, series_oracle
from tpnsi.heat_kernel import (
    DomainError,
    HeatTraceSample,
    IntegralBounds,
    ScaledMetricPoint,
    bounds_I1minus,
    bounds_I4,
    bounds_I5,
    constant_K,
    eval_I1,
    eval_I2,
    eval_I3,
    eval_I3_exact,
    eval_I4,
    eval_I5,
    eval_theta0,
    eval_theta1,
    series_S,
    theta0_integral,
    u_over_sinh,
)
from tpnsi.quadrature import QuadratureSpec

# frozen after agreement with the oracles in this file
THETA0_1_1 = 0.020840421885943147
I3_CLOSED_1_1 = 0.4627453058663832
I3_EXACT_1_1 = 0.044536927945390194
K_FIXTURE = 0.12285384825734678
I1_MINUS_2_1 = 0.18547075230970803
I4_2_1 = 0.0026249976077392574
I5_2_1 = 0.00422417291216172
SERIES = {
    (0.0, "+"): 0.0,
    (0.0, "-"): 0.0,
    (0.5, "+"): -0.12285384825734673,
    (0.5, "-"): 0.3105672358553062,
    (1.0, "+"): 0.0,
    (1.0, "-"): 0.7163993670516798,
    (2.0, "+"): 0.7163993670516798,
    (2.0, "-"): 1.6322113782101992,
    (10.0, "+"): 8.535068218145499,
    (10.0, "-"): 9.53173159692795,
}

P11 = ScaledMetricPoint(1.0, 1.0)
P21 = ScaledMetricPoint(2.0, 1.0)


class TestPoint:
    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            ScaledMetricPoint(0.0, 1.0)
        with pytest.raises(DomainError):
            ScaledMetricPoint(1.0, -1.0)

    def test_on_path(self):
        p = ScaledMetricPoint.on_path(1e4, 0.5)
        assert p.c == pytest.approx(100.0)
        assert p.zeta == 0.5


class TestTheta0:
    def test_removable_singularity(self):
        assert u_over_sinh(0.0) == 1.0
        assert float(u_over_sinh(1e-3)) == pytest.approx(1e-3 / math.sinh(1e-3), rel=1e-15)

    def test_value_against_composite_oracle(self):
        oracle = composite_gauss_theta0(1.0, 1.0)
        assert eval_theta0(P11).theta == pytest.approx(oracle, rel=1e-9)
        assert eval_theta0(P11).theta == pytest.approx(THETA0_1_1, rel=1e-12)

    def test_integral_limit_is_pi_squared_over_four(self):
        full, _ = sci_integrate.quad(lambda u: u / math.sinh(u) if u else 1.0, 0, 80, epsrel=1e-13)
        assert full == pytest.approx(math.pi**2 / 4, rel=1e-12)
        value, _ = theta0_integral(1e12)
        assert value == pytest.approx(math.pi**2 / 4, rel=1e-9)

    def test_large_time_constant(self):
        t, c = 1e8, 1.0
        s = eval_theta0(ScaledMetricPoint(t, c))
        assert c * t * t * s.theta == pytest.approx(1 / 16, rel=1e-6)

    @pytest.mark.parametrize("t", [1e2, 1e4, 1e7])
    @pytest.mark.parametrize("c", [0.05, 1.0, 30.0])
    def test_error_estimate_within_tolerance(self, t, c):
        quad = QuadratureSpec()
        s = eval_theta0(ScaledMetricPoint(t, c), quad)
        assert s.theta > 0
        assert 0 <= s.est_abs_error <= quad.rel_tol * s.theta + quad.abs_tol


class TestClosedForms:
    def test_I2(self):
        assert eval_I2(ScaledMetricPoint(2.0, 3.0)) == 2.25
        assert eval_I2(P11) == 0.5
        c = 1.7
        assert eval_I2(ScaledMetricPoint(c**-2, c)) == pytest.approx(c**4 / 2, rel=1e-15)

    def test_I3_closed_form_value(self):
        # independent erfc: complementary integral of the Gaussian by QUADPACK
        erfc1 = 2 / math.sqrt(math.pi) * sci_integrate.quad(lambda x: math.exp(-x * x), 1, np.inf)[0]
        want = math.exp(-1) / 2 + math.sqrt(math.pi) * erfc1
        assert eval_I3(P11) == pytest.approx(want, rel=1e-12)
        assert eval_I3(P11) == pytest.approx(I3_CLOSED_1_1, rel=1e-14)

    def test_I3_defining_integral(self):
        t, c = 1.0, 1.0
        f = lambda k: k * math.exp(-(2 * k + k * k / (c * c) + c * c) * t)
        want = sci_integrate.quad(f, 0, np.inf, epsrel=1e-13)[0]
        assert eval_I3_exact(P11) == pytest.approx(want, rel=1e-11)
        assert eval_I3_exact(P11) == pytest.approx(I3_EXACT_1_1, rel=1e-14)

    def test_I3_small_argument_limit(self):
        p = ScaledMetricPoint(1e-6, 1e-3)
        assert eval_I3(p) == pytest.approx(eval_I2(p) + math.sqrt(math.pi) * p.c**3 / math.sqrt(p.t), rel=1e-8)

    @given(st.floats(-1.0, 7.0), st.floats(-0.4, 0.9))
    def test_I3_identity_with_I2(self, log_t, zeta):
        p = ScaledMetricPoint.on_path(10.0**log_t, zeta)
        assume(p.a < 600)  # keep the unscaled oracle out of subnormals
        x = p.c * math.sqrt(p.t)
        rhs = eval_I2(p) * (math.exp(-p.a) + 2 * math.sqrt(math.pi) * x * float(special.erfc(x)))
        assert eval_I3(p) <= rhs * (1 + 1e-13)

    def test_I3_scaled_branch_keeps_relative_accuracy(self):
        p = ScaledMetricPoint(26.5**2, 1.0)  # past the switch, value near 1e-305
        x = p.c * math.sqrt(p.t)
        log_want = math.log(p.c**2 / (2 * p.t) + math.sqrt(math.pi) * p.c**3 / math.sqrt(p.t) * float(special.erfcx(x))) - p.a
        assert math.log(eval_I3(p)) == pytest.approx(log_want, rel=1e-14)

    @pytest.mark.parametrize("zeta,t", [(-0.4, 1e12), (0.0, 100.0), (0.5, 10.0)])
    def test_I3_decays_faster_than_powers(self, zeta, t):
        # local log-log slope, well past -10 once c^2 t is large
        lo, hi = (eval_I3(ScaledMetricPoint.on_path(x, zeta)) for x in (t, 2 * t))
        assert math.log(hi / lo) / math.log(2.0) < -10


class TestSeries:
    @pytest.mark.parametrize("key", sorted(SERIES))
    def test_frozen_and_oracle(self, key):
        v, sign = key
        got = series_S(v, sign)
        assert got == pytest.approx(series_oracle(v, sign), abs=1e-12)
        assert got == pytest.approx(SERIES[key], abs=1e-14)

    @pytest.mark.parametrize("v", [0.0, 0.5, 1.0, 2.0, 10.0])
    @pytest.mark.parametrize("sign", ["+", "-"])
    def test_brute_force_mode_agrees(self, v, sign):
        assert abs(series_S(v, sign, oracle=True) - series_S(v, sign)) <= 1e-9

    def test_sign_analysis(self):
        assert series_S(0.5, "+") < 0
        assert series_S(0.0, "-") == 0.0

    def test_bracket_at_two(self):
        s = series_S(2.0, "-")
        weak = math.sqrt(2.5**2 + 6) - 2.5  # = 1 exactly
        mid = math.sqrt(2.5**2 + 2) - 1.5
        assert weak == pytest.approx(1.0, abs=1e-15)
        assert weak <= mid <= s
        # the second expression is a lower bound, not an upper one
        assert s - mid == pytest.approx(0.2599301, abs=1e-6)

    @given(st.floats(0.0, 200.0))
    def test_integral_comparison_bracket(self, v):
        # convex decreasing summand: int_{3/2}^inf <= S <= int_1^inf
        s = series_S(v, "-")
        lo = math.sqrt((v + 0.5) ** 2 + 2) - 1.5
        hi = math.sqrt((v + 0.5) ** 2 + 0.75) - 1.0
        assert lo - 1e-12 <= s <= hi + 1e-12

    def test_negative_v_rejected(self):
        with pytest.raises(DomainError):
            series_S(-0.1, "+")

    def test_vectorised(self):
        vs = np.array([0.5, 2.0, 10.0])
        assert np.allclose(series_S(vs, "-"), [SERIES[(v, "-")] for v in vs], rtol=0, atol=1e-14)


class TestIntegrals:
    def test_I1_minus_oracle(self):
        assert eval_I1(P21, "-") == pytest.approx(quadpack_substituted(2.0, 1.0, "-", 0.0, math.inf), rel=1e-10)
        assert eval_I1(P21, "-") == pytest.approx(I1_MINUS_2_1, rel=1e-12)

    def test_I4_I5_oracle(self):
        assert eval_I4(P21) == pytest.approx(quadpack_substituted(2.0, 1.0, "+", 1.0, math.inf), rel=1e-10)
        assert eval_I5(P21) == pytest.approx(quadpack_substituted(2.0, 1.0, "+", 0.0, 1.0), rel=1e-10)
        assert eval_I4(P21) == pytest.approx(I4_2_1, rel=1e-12)
        assert eval_I5(P21) == pytest.approx(I5_2_1, rel=1e-12)

    def test_I1_plus_is_I4_plus_I5(self):
        assert eval_I1(P21, "+") == pytest.approx(eval_I4(P21) + eval_I5(P21), rel=1e-15)

    def test_I5_is_positive(self):
        # the series is negative on (0, 1) and the weight v - 1/2 changes sign there
        assert eval_I5(P21) > 0

    def test_scaled_I4_matches(self):
        p = ScaledMetricPoint(3.0, 0.7)
        assert eval_I4(p, scaled=True) * math.exp(-p.a) == pytest.approx(eval_I4(p), rel=1e-14)

    @pytest.mark.parametrize("t", [1e3, 1e5])
    def test_I1_minus_large_time(self, t):
        c = 1.0
        p = ScaledMetricPoint(t, c)
        ratio = t * eval_I1(p, "-") / c**2
        b = bounds_I1minus(p)
        assert b.contains(eval_I1(p, "-"))
        # t I1-/c^2 settles near 0.118, inside [1/20, 1/4] as the factor 5 allows
        assert 0.05 <= ratio <= 0.25 + math.sqrt(math.pi) / (4 * c * math.sqrt(t))
        assert ratio == pytest.approx(0.118, abs=0.01)


class TestBounds:
    @given(st.floats(-2, 7), st.floats(-2, 2))
    def test_I1_minus_ratio_is_five(self, log_t, log_c):
        b = bounds_I1minus(ScaledMetricPoint(10.0**log_t, 10.0**log_c))
        assert b.upper / b.lower == pytest.approx(5.0, rel=1e-15)

    def test_I4_bounds_vanish(self):
        b = bounds_I4(ScaledMetricPoint(1e4, 1.0))
        assert b.upper == 0.0 and b.lower == 0.0
        s = bounds_I4(ScaledMetricPoint(1e4, 1.0), scaled=True)
        assert 0 < s.lower < s.upper < 1e-8

    def test_K_fixture(self):
        K = constant_K()
        assert K == pytest.approx(K_FIXTURE, abs=1e-15)
        assert 0 < K < 0.2
        assert K == pytest.approx(-series_S(0.5, "+"), abs=1e-14)

    def test_I5_bounds_upper_is_zero(self):
        b = bounds_I5(P21, K_FIXTURE)
        assert b.upper == 0.0 and b.lower <= 0.0

    def test_interval_validation(self):
        with pytest.raises(ValueError):
            IntegralBounds(1.0, 0.0)


class TestTheta1:
    def test_substituted_lower_bound(self):
        K = constant_K()
        for t in (1e2, 1e4, 1e6):
            for c in (0.1, 1.0, 10.0):
                p = ScaledMetricPoint(t, c)
                lhs = eval_theta1(p, variant="substituted").theta
                parts = eval_I2(p) + eval_I3(p) + eval_I1(p, "-") + eval_I4(p) + bounds_I5(p, K).lower
                assert lhs >= parts / (2 * math.pi**2 * c) * (1 - 1e-12)

    def test_above_I2_term(self):
        for t in (1e2, 1e5):
            p = ScaledMetricPoint(t, 1.0)
            assert eval_theta1(p).theta > p.c / (4 * math.pi**2 * p.t)

    def test_variants_differ_only_in_constant(self):
        a = [eval_theta1(ScaledMetricPoint.on_path(t, 0.0)).theta for t in (1e5, 1e6)]
        b = [eval_theta1(ScaledMetricPoint.on_path(t, 0.0), variant="substituted").theta for t in (1e5, 1e6)]
        assert math.log(a[0] / a[1]) == pytest.approx(math.log(b[0] / b[1]), rel=1e-3)

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            eval_theta1(P11, variant="other")


GRID_T = [10.0**e for e in range(2, 8)]


@pytest.mark.parametrize("c", [10**-0.8, 1.0, 10.0])
def test_traces_positive_and_decreasing(c):
    th0 = [eval_theta0(ScaledMetricPoint(t, c)).theta for t in GRID_T]
    th1 = [eval_theta1(ScaledMetricPoint(t, c)).theta for t in GRID_T]
    for seq in (th0, th1):
        assert all(x > 0 for x in seq)
        assert all(a > b for a, b in zip(seq, seq[1:]))


@pytest.mark.parametrize("t,c", [(1e2, 0.2), (1e4, 1.0), (1e6, 100.0), (1e7, 10**-2.8)])
@pytest.mark.parametrize("fn", [eval_theta0, eval_theta1])
def test_halving_tolerance_is_self_consistent(fn, t, c):
    quad = QuadratureSpec()
    p = ScaledMetricPoint(t, c)
    coarse = fn(p, quad)
    fine = fn(p, quad.halved())
    assert isinstance(coarse, HeatTraceSample)
    assert abs(fine.theta - coarse.theta) <= coarse.est_abs_error
    assert coarse.est_abs_error <= quad.rel_tol * coarse.theta + quad.abs_tol


@settings(max_examples=25)
@given(st.floats(2.0, 7.0), st.floats(-0.4, 0.9))
def test_sample_invariants(log_t, zeta):
    p = ScaledMetricPoint.on_path(10.0**log_t, zeta)
    quad = QuadratureSpec()
    for s in (eval_theta0(p, quad), eval_theta1(p, quad)):
        assert s.theta > 0
        assert 0 <= s.est_abs_error <= quad.rel_tol * s.theta + quad.abs_tol
