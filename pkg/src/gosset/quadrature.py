"""Adaptive integration of the pricing and calibration kernels.

Every price, greek, and expected-volatility formula in the model reduces to
one of three integrals over a finite interval:

    integrate_exp_kernel      int e^(sigma xi) f(xi) dxi
    integrate_moment_kernel   int xi e^(sigma xi) f(xi) dxi
    integrate_second_moment   int xi^2 f(xi) dxi

Integration is adaptive Gauss-Kronrod (QUADPACK) behind a fixed tolerance
contract; callers map logically infinite bounds to quantile(1e-12) /
quantile(1 - 1e-12) before integrating, which is also how the
"no truncation" limit is defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy import integrate

from gosset.distributions import ReturnDistribution

BOUND_EPSILON = 1e-12
# math.exp overflows above ~709.78; stay clear of it.
_EXP_LIMIT = 700.0


class QuadratureError(RuntimeError):
    """Adaptive subdivision failed to reach the requested tolerance, or the
    integrand is not representable in float64 on the interval."""


def _check_exp_range(sigma: float, iv: Interval) -> None:
    if sigma < 0.0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma * iv.hi > _EXP_LIMIT:
        raise QuadratureError(
            f"exp(sigma * x) overflows float64 at x = {iv.hi:.6g} with "
            f"sigma = {sigma:.6g}; the upper bound is effectively unbounded "
            "for this distribution"
        )


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval bounds must be finite, got [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ValueError(f"interval bounds out of order: [{self.lo}, {self.hi}]")


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    max_subdivisions: int = 200

    def __post_init__(self) -> None:
        if self.rel_tol < 1e-14:
            raise ValueError("rel_tol below 1e-14 is not honest for float64")
        if self.abs_tol <= 0.0:
            raise ValueError("abs_tol must be positive")
        if self.max_subdivisions <= 0:
            raise ValueError("max_subdivisions must be positive")


DEFAULT_CONFIG = QuadratureConfig()


# Force initial subdivisions at these quantiles.  On a wide interval (a far
# tail bound) the initial Gauss-Kronrod nodes can all miss the distribution's
# core, silently returning ~0; anchoring panels to the mass prevents that.
_ANCHOR_PROBS = (1e-9, 1e-4, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0 - 1e-4, 1.0 - 1e-9)


def _anchors(dist: ReturnDistribution, iv: Interval) -> list:
    pts = [dist.quantile(p) for p in _ANCHOR_PROBS]
    return [x for x in pts if iv.lo < x < iv.hi]


def _adaptive(
    f: Callable[[float], float],
    dist: ReturnDistribution,
    iv: Interval,
    cfg: QuadratureConfig,
) -> float:
    if iv.lo == iv.hi:
        return 0.0
    out = integrate.quad(
        f,
        iv.lo,
        iv.hi,
        epsabs=cfg.abs_tol,
        epsrel=cfg.rel_tol,
        limit=cfg.max_subdivisions,
        points=_anchors(dist, iv) or None,
        full_output=1,
    )
    if len(out) > 3:
        raise QuadratureError(f"integration failed on [{iv.lo}, {iv.hi}]: {out[3]}")
    return float(out[0])


def integrate_exp_kernel(
    dist: ReturnDistribution,
    sigma: float,
    iv: Interval,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """int_lo^hi e^(sigma xi) f(xi) dxi; positive when lo < hi."""
    _check_exp_range(sigma, iv)
    return _adaptive(lambda x: math.exp(sigma * x) * dist.pdf(x), dist, iv, cfg)


def integrate_moment_kernel(
    dist: ReturnDistribution,
    sigma: float,
    iv: Interval,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """int_lo^hi xi e^(sigma xi) f(xi) dxi; sign unconstrained."""
    _check_exp_range(sigma, iv)
    return _adaptive(lambda x: x * math.exp(sigma * x) * dist.pdf(x), dist, iv, cfg)


def integrate_second_moment(
    dist: ReturnDistribution,
    iv: Interval,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """int_lo^hi xi^2 f(xi) dxi; nonnegative."""
    return _adaptive(lambda x: x * x * dist.pdf(x), dist, iv, cfg)


def effective_bounds(dist: ReturnDistribution, lo: float, hi: float) -> Interval:
    """Map logically infinite bounds to the distribution's far quantiles."""
    if math.isinf(lo):
        lo = dist.quantile(BOUND_EPSILON)
    if math.isinf(hi):
        hi = dist.quantile(1.0 - BOUND_EPSILON)
    return Interval(lo, hi)
