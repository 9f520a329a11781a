"""Kernel integration tests.

The three kernels are checked against frozen 30-digit reference integrals
and against the distribution function itself (the sigma = 0 exponential
kernel must reproduce cdf differences, an independent code path).
"""

from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as strats

from gosset.distributions import INFINITE, ReturnDistribution
from gosset.quadrature import (
    DEFAULT_CONFIG,
    Interval,
    QuadratureConfig,
    QuadratureError,
    effective_bounds,
    integrate_exp_kernel,
    integrate_moment_kernel,
    integrate_second_moment,
)

T3 = ReturnDistribution(3.0)


# ---------------------------------------------------------------------------
# Construction contracts
# ---------------------------------------------------------------------------


def test_interval_requires_finite_ordered_bounds():
    with pytest.raises(ValueError):
        Interval(-math.inf, 0.0)
    with pytest.raises(ValueError):
        Interval(0.0, math.inf)
    with pytest.raises(ValueError):
        Interval(1.0, 0.0)
    Interval(2.0, 2.0)  # degenerate but legal


def test_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(rel_tol=1e-15)
    with pytest.raises(ValueError):
        QuadratureConfig(abs_tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(max_subdivisions=0)


def test_degenerate_interval_integrates_to_zero():
    assert integrate_exp_kernel(T3, 0.3, Interval(1.0, 1.0)) == 0.0


def test_negative_sigma_rejected():
    with pytest.raises(ValueError):
        integrate_exp_kernel(T3, -0.1, Interval(0.0, 1.0))
    with pytest.raises(ValueError):
        integrate_moment_kernel(T3, -0.1, Interval(0.0, 1.0))


# ---------------------------------------------------------------------------
# Frozen reference integrals (30-digit evaluations)
# ---------------------------------------------------------------------------


def test_exp_kernel_oracle():
    got = integrate_exp_kernel(T3, 0.3, Interval(-1.0, 2.0))
    assert got == pytest.approx(0.8094935350918629, rel=1e-12)


def test_moment_kernel_oracle():
    got = integrate_moment_kernel(T3, 0.3, Interval(-1.0, 2.0))
    assert got == pytest.approx(0.32825414562460044, rel=1e-12)


def test_second_moment_oracle():
    got = integrate_second_moment(T3, Interval(0.0, 3.0776835371752527))
    assert got == pytest.approx(0.60235727294343774, rel=1e-12)


def test_exp_kernel_over_huge_interval():
    # All mass sits in a narrow core; the adaptive rule must not lose it.
    got = integrate_exp_kernel(
        T3, 0.3, Interval(-10331.108244292486, 10.214531852406887)
    )
    assert got == pytest.approx(1.1217322259975061, rel=1e-12)


# ---------------------------------------------------------------------------
# Properties
# ---------------------------------------------------------------------------


@given(
    lo=strats.floats(min_value=-20.0, max_value=19.0),
    width=strats.floats(min_value=0.0, max_value=10.0),
    nu=strats.floats(min_value=2.05, max_value=100.0),
)
def test_zero_sigma_kernel_equals_cdf_difference(lo, width, nu):
    d = ReturnDistribution(nu)
    iv = Interval(lo, lo + width)
    got = integrate_exp_kernel(d, 0.0, iv)
    assert got == pytest.approx(d.cdf(iv.hi) - d.cdf(iv.lo), abs=1e-11)


@given(
    sigma=strats.floats(min_value=0.0, max_value=0.6),
    hi=strats.floats(min_value=0.5, max_value=12.0),
)
def test_exp_kernel_positive_and_monotone_in_sigma(sigma, hi):
    iv = Interval(-hi, hi)
    base = integrate_exp_kernel(T3, sigma, iv)
    more = integrate_exp_kernel(T3, sigma + 0.05, iv)
    assert base > 0.0
    assert more >= base  # e^(sx) convex in s and the interval is symmetric


def test_second_moment_nonnegative_and_additive():
    a = integrate_second_moment(T3, Interval(-2.0, 0.5))
    b = integrate_second_moment(T3, Interval(0.5, 3.0))
    whole = integrate_second_moment(T3, Interval(-2.0, 3.0))
    assert a >= 0.0 and b >= 0.0
    assert a + b == pytest.approx(whole, rel=1e-12)


def test_tighter_tolerance_agrees():
    tight = QuadratureConfig(rel_tol=1e-12, abs_tol=1e-14)
    iv = Interval(-5.0, 5.0)
    assert integrate_exp_kernel(T3, 0.3, iv) == pytest.approx(
        integrate_exp_kernel(T3, 0.3, iv, tight), rel=1e-9
    )


# ---------------------------------------------------------------------------
# Failure modes and bound mapping
# ---------------------------------------------------------------------------


def test_overflowing_kernel_raises_quadrature_error():
    with pytest.raises(QuadratureError):
        integrate_exp_kernel(T3, 0.3, Interval(0.0, 3000.0))
    with pytest.raises(QuadratureError):
        integrate_moment_kernel(T3, 0.5, Interval(0.0, 2000.0))


def test_effective_bounds_map_infinities_to_far_quantiles():
    iv = effective_bounds(T3, -math.inf, math.inf)
    assert iv.lo == pytest.approx(T3.quantile(1e-12), rel=1e-12)
    assert iv.hi == pytest.approx(T3.quantile(1.0 - 1e-12), rel=1e-12)
    assert iv.lo < -1e3 and iv.hi > 1e3  # fat tails reach far out


def test_effective_bounds_pass_finite_values_through():
    iv = effective_bounds(T3, -1.5, 2.5)
    assert (iv.lo, iv.hi) == (-1.5, 2.5)


def test_effective_bounds_normal_limit_is_modest():
    iv = effective_bounds(ReturnDistribution(INFINITE), -math.inf, math.inf)
    assert -8.0 < iv.lo < -6.0 and 6.0 < iv.hi < 8.0
