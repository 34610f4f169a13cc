import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphere_ineq.errors import DomainError
from sphere_ineq.spectral_series import (
    CertifiedValue,
    Params,
    TailMethod,
    asymptotic_defect,
    eval_I,
    eval_J,
    eval_R,
    partial_sum_I,
    partial_sum_R,
    r2_integral_check,
    scan_monotonicity,
)


def brute_I(p, m, N=10**6):
    """Partial sum to N plus the integral-test bracket for the rest."""
    n = np.arange(1, N + 1, dtype=float)
    with np.errstate(over="ignore"):
        S = math.fsum((2 * n + 1) / (m * m + n * n + n) ** p)
    K = (p - 1) * m ** (2 * (p - 1))

    def T(a):
        return (m * m + a * a + a) ** (1 - p) / (p - 1)

    return K * (S + T(N + 1)), K * (S + T(N))


def mp_R(p):
    mp.mp.dps = 30
    return float(mp.nsum(lambda n: (2 * n + 1) / (n * n + n) ** mp.mpf(p), [2, mp.inf], method="euler-maclaurin"))


def brute_J(p, m, R=600):
    """Disk sum of radius R plus the continuum tail."""
    a = np.arange(-R, R + 1, dtype=float)
    parts = []
    for i in range(-R, R + 1):
        r2 = i * i + a * a
        sel = (r2 <= R * R) & (r2 > 0)
        parts.append(np.sum((m * m + r2[sel]) ** (-p)))
    S = math.fsum(parts) + math.pi * (m * m + R * R) ** (1 - p) / (p - 1)
    return (p - 1) * m ** (2 * (p - 1)) / math.pi * S


class TestParams:
    def test_valid(self):
        assert Params(2.0, 1.0).p == 2.0

    @pytest.mark.parametrize("p,m", [(0.5, 1.0), (2.0, -1.0), (float("nan"), 1.0)])
    def test_invalid(self, p, m):
        with pytest.raises(DomainError):
            Params(p, m)


class TestEvalI:
    def test_m_zero(self):
        v = eval_I(2.0, 0.0)
        assert (v.lo, v.hi) == (0.0, 0.0)
        assert v.tail_method is TailMethod.CLOSED_FORM

    def test_p2_m1_against_brute_force(self):
        lo, hi = brute_I(2.0, 1.0)
        v = eval_I(2.0, 1.0)
        assert v.lo <= lo and hi <= v.hi
        assert v.width <= 1e-9
        assert v.mid == pytest.approx(0.5356822852645998, abs=1e-9)

    def test_p2_m100(self):
        v = eval_I(2.0, 100.0)
        assert 0.999 < v.lo and v.hi < 1.0
        lo, hi = brute_I(2.0, 100.0)
        assert v.lo <= lo and hi <= v.hi

    @pytest.mark.parametrize("p,m", [(1.5, 1.0), (3.0, 0.5), (10.0, 2.0), (1.1, 5.0), (1.01, 0.3), (64.0, 3.0)])
    def test_contains_oracle(self, p, m):
        v = eval_I(p, m)
        lo, hi = brute_I(p, m)
        # the oracle bracket must intersect the enclosure
        assert v.lo <= hi and lo <= v.hi
        assert v.width <= 1e-9

    def test_underflowing_mass(self):
        # m^2 is subnormal but m^{2(p-1)} is not small for p near 1
        v = eval_I(1.05, 1e-160)
        assert 1.0071862435052339e-16 in v

    def test_soundness_against_longer_partial_sums(self):
        v = eval_I(2.0, 3.0)
        for N in (v.terms_used + 1, 10 * v.terms_used, 1000 * v.terms_used):
            assert partial_sum_I(2.0, 3.0, N) <= v.hi

    def test_domain(self):
        with pytest.raises(DomainError):
            eval_I(1.0, 1.0)
        with pytest.raises(DomainError):
            eval_I(2.0, 1.0, tol=0.0)

    @settings(max_examples=30, deadline=None)
    @given(p=st.floats(1.05, 20.0), m=st.floats(0.0, 60.0))
    def test_below_one_and_ordered(self, p, m):
        v = eval_I(p, m)
        assert 0.0 <= v.lo <= v.hi < 1.0


class TestEvalR:
    def test_telescoping(self):
        v = eval_R(2.0)
        assert 0.25 in v
        assert v.width <= 1e-9

    @pytest.mark.parametrize("p", [1.5, 3.0, 5.0])
    def test_against_mpmath(self, p):
        v = eval_R(p)
        ref = mp_R(p)
        assert v.lo - 1e-12 <= ref <= v.hi + 1e-12

    def test_frozen_values(self):
        assert eval_R(3.0).mid == pytest.approx(0.029113806319188571, abs=1e-10)
        assert eval_R(1.5).mid == pytest.approx(1.0098843045417846, abs=1e-9)

    def test_partial_sums_below_hi(self):
        v = eval_R(1.5)
        assert partial_sum_R(1.5, 10**6) <= v.hi


class TestEvalJ:
    def test_m_zero(self):
        v = eval_J(2.0, 0.0)
        assert (v.lo, v.hi) == (0.0, 0.0)

    def test_p2_m1_brute_force(self):
        v = eval_J(2.0, 1.0)
        assert v.hi < 1.0
        assert v.mid == pytest.approx(brute_J(2.0, 1.0), abs=2e-6)
        assert v.mid == pytest.approx(0.7087428606885, abs=1e-10)

    def test_routes_agree(self):
        for p, m in [(2.0, 1.0), (3.0, 2.0), (1.5, 0.7)]:
            d = eval_J(p, m, method="dual")
            s = eval_J(p, m, tol=1e-6, method="direct")
            assert s.lo <= d.hi and d.lo <= s.hi
            assert d.tail_method is TailMethod.POISSON_DUAL

    def test_p2_m100(self):
        v = eval_J(2.0, 100.0)
        assert 0.99 < v.lo and v.hi < 1.0

    def test_frozen(self):
        assert eval_J(3.0, 2.0).mid == pytest.approx(0.8412985159089, abs=1e-11)
        assert eval_J(10.0, 2.0).mid == pytest.approx(0.36189984747, abs=1e-10)


class TestR2Integral:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 5.0])
    @pytest.mark.parametrize("m", [0.5, 1.0, 2.0, 10.0])
    def test_identity(self, p, m):
        assert r2_integral_check(p, m) <= 1e-10

    def test_slow_decay(self):
        assert r2_integral_check(1.1, 10.0) <= 1e-8

    def test_domain(self):
        with pytest.raises(DomainError):
            r2_integral_check(2.0, 0.0)


class TestAsymptotics:
    @pytest.mark.parametrize("p,m,tol", [(2.0, 100.0, 0.01), (3.0, 50.0, 0.02), (1.5, 200.0, 0.005)])
    def test_defect(self, p, m, tol):
        assert abs(asymptotic_defect(p, m) - 1.0) <= tol

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_second_order_rate(self, p):
        r = abs(asymptotic_defect(p, 50.0) - 1.0) / abs(asymptotic_defect(p, 100.0) - 1.0)
        assert 3.0 <= r <= 5.0

    def test_requires_large_m(self):
        with pytest.raises(DomainError):
            asymptotic_defect(2.0, 5.0)


class TestMonotonicity:
    def test_p2(self):
        rep = scan_monotonicity(2.0, np.arange(0.0, 5.0 + 1e-9, 0.25).tolist(), 1e-8)
        assert rep.violations == []

    def test_p4(self):
        rep = scan_monotonicity(4.0, np.arange(0.0, 10.0 + 1e-9, 0.5).tolist(), 1e-8)
        assert rep.violations == []

    def test_single_point(self):
        rep = scan_monotonicity(2.0, [1.0])
        assert rep.violations == [] and rep.inconclusive == []

    def test_requires_ascending(self):
        with pytest.raises(DomainError):
            scan_monotonicity(2.0, [1.0, 0.5])


def test_certified_value_helpers():
    v = CertifiedValue(1.0, 3.0, TailMethod.CLOSED_FORM, 0)
    assert v.mid == 2.0 and v.width == 2.0 and 2.5 in v and 4.0 not in v
