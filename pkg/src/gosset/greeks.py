"""Analytic and numeric sensitivities of the call price.

Delta, Gamma and Vega have closed forms in terms of the same exponential
kernels as the prices; Theta follows the one-day reprice recipe (rate and
volatility rescaled by 366/365 and its square root), and the two
model-specific sensitivities (shape parameter, cap probability) are finite
differences that rebuild the tail policy at each evaluation, since the
critical values move with the bumped parameter.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

from gosset.distributions import ReturnDistribution
from gosset.pricing import (
    MarketParams,
    TailMode,
    TailPolicy,
    martingale_A,
    normalization,
    price_call,
)
from gosset.quadrature import (
    DEFAULT_CONFIG,
    Interval,
    QuadratureConfig,
    integrate_exp_kernel,
    integrate_moment_kernel,
)

ONE_DAY_FACTOR = 366.0 / 365.0


class FdScheme(enum.Enum):
    FORWARD = "forward"
    CENTRAL = "central"


@dataclass(frozen=True)
class FdConfig:
    """Finite-difference step control.

    ``step`` is relative to the bumped parameter's magnitude; for the cap
    probability it is relative to (1 - p_c), the distance to the divergent
    boundary, which keeps p_c + step < 1 automatically.
    """

    step: float = 1e-5
    scheme: FdScheme = FdScheme.CENTRAL

    def __post_init__(self) -> None:
        if not (0.0 < self.step < 1.0):
            raise ValueError(f"relative step must lie in (0, 1), got {self.step}")


@dataclass(frozen=True)
class GreeksReport:
    delta: float
    gamma: float
    vega: float
    theta: float
    dc_dnu: Optional[float]
    dc_dp: Optional[float]


def _strike_return(mkt: MarketParams, a_t: float) -> float:
    return math.log(mkt.strike / a_t) / mkt.sigma_t


def delta_truncated(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """dC0/dS0 for a truncated policy."""
    if policy.mode is not TailMode.TRUNCATED:
        raise ValueError("delta_truncated requires a TRUNCATED policy")
    if mkt.strike == 0.0:
        return 1.0
    z = normalization(dist, policy, mkt.sigma_t, cfg)
    iv = policy.integration_interval(dist)
    d = _strike_return(mkt, martingale_A(mkt, z))
    if d >= iv.hi:
        return 0.0
    lo = max(d, iv.lo)
    kernel = integrate_exp_kernel(dist, mkt.sigma_t, Interval(lo, iv.hi), cfg)
    return kernel / (z * (policy.p_c - policy.p_p))


def delta_capped(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """dC0/dS0 for a capped policy (includes the cap-mass term)."""
    if policy.mode is not TailMode.CAPPED:
        raise ValueError("delta_capped requires a CAPPED policy")
    if mkt.strike == 0.0:
        return 1.0
    z = normalization(dist, policy, mkt.sigma_t, cfg)
    iv = policy.integration_interval(dist)
    sigma = mkt.sigma_t
    d = _strike_return(mkt, martingale_A(mkt, z))
    if d >= policy.x_c:
        return 0.0
    lo = max(d, iv.lo)
    value = integrate_exp_kernel(dist, sigma, Interval(lo, iv.hi), cfg)
    value += (1.0 - policy.p_c) * math.exp(sigma * policy.x_c)
    if policy.p_p > 0.0 and d < policy.x_p:
        # Strike below the floor: the floor payoff is in the money too.
        value += policy.p_p * math.exp(sigma * policy.x_p)
    return value / z


def _gamma(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: QuadratureConfig,
    truncated: bool,
) -> float:
    if mkt.strike == 0.0:
        return 0.0
    z = normalization(dist, policy, mkt.sigma_t, cfg)
    d = _strike_return(mkt, martingale_A(mkt, z))
    if not (policy.x_p < d < policy.x_c):
        return 0.0
    value = mkt.strike * math.exp(-mkt.rt) * dist.pdf(d)
    value /= mkt.s0 * mkt.s0 * mkt.sigma_t
    if truncated:
        value /= policy.p_c - policy.p_p
    return value


def gamma_truncated(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """d2C0/dS0^2 for a truncated policy."""
    if policy.mode is not TailMode.TRUNCATED:
        raise ValueError("gamma_truncated requires a TRUNCATED policy")
    return _gamma(dist, policy, mkt, cfg, truncated=True)


def gamma_capped(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """d2C0/dS0^2 for a capped policy."""
    if policy.mode is not TailMode.CAPPED:
        raise ValueError("gamma_capped requires a CAPPED policy")
    return _gamma(dist, policy, mkt, cfg, truncated=False)


def vega_truncated(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """dC0/dsigma_T for a truncated policy.

    The normalization tZ depends on sigma_T, so the derivative carries a
    -(dZ/dsigma) term alongside the payoff-kernel term; dropping it is a
    large error, not a refinement.
    """
    if policy.mode is not TailMode.TRUNCATED:
        raise ValueError("vega_truncated requires a TRUNCATED policy")
    if mkt.strike == 0.0:
        return 0.0
    sigma = mkt.sigma_t
    span = policy.p_c - policy.p_p
    z = normalization(dist, policy, sigma, cfg)
    iv = policy.integration_interval(dist)
    d = _strike_return(mkt, martingale_A(mkt, z))
    if d >= iv.hi:
        return 0.0
    lo = max(d, iv.lo)
    money = Interval(lo, iv.hi)
    dz_dsigma = integrate_moment_kernel(dist, sigma, iv, cfg) / span
    value = mkt.s0 / (z * span) * integrate_moment_kernel(dist, sigma, money, cfg)
    value -= (
        mkt.s0 / (z * z * span) * dz_dsigma * integrate_exp_kernel(dist, sigma, money, cfg)
    )
    return value


def vega_capped(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """dC0/dsigma_T for a capped policy (payoff, normalization and cap terms)."""
    if policy.mode is not TailMode.CAPPED:
        raise ValueError("vega_capped requires a CAPPED policy")
    if mkt.strike == 0.0:
        return 0.0
    sigma = mkt.sigma_t
    z = normalization(dist, policy, sigma, cfg)
    iv = policy.integration_interval(dist)
    d = _strike_return(mkt, martingale_A(mkt, z))
    if d >= policy.x_c:
        return 0.0
    lo = max(d, iv.lo)
    money = Interval(lo, iv.hi)

    dz_dsigma = integrate_moment_kernel(dist, sigma, iv, cfg)
    dz_dsigma += (1.0 - policy.p_c) * policy.x_c * math.exp(sigma * policy.x_c)
    if policy.p_p > 0.0:
        dz_dsigma += policy.p_p * policy.x_p * math.exp(sigma * policy.x_p)

    value = mkt.s0 / z * integrate_moment_kernel(dist, sigma, money, cfg)
    value -= mkt.s0 / (z * z) * dz_dsigma * integrate_exp_kernel(dist, sigma, money, cfg)
    value += (
        mkt.s0
        * math.exp(sigma * policy.x_c)
        * (1.0 - policy.p_c)
        / z
        * (policy.x_c - dz_dsigma / z)
    )
    if policy.p_p > 0.0 and d < policy.x_p:
        value += (
            mkt.s0
            * math.exp(sigma * policy.x_p)
            * policy.p_p
            / z
            * (policy.x_p - dz_dsigma / z)
        )
    return value


def theta_numeric(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """One extra day of life, by reprice: C0 with rT and sigma_T grown by
    366/365 (and its square root) minus the base C0."""
    bumped = MarketParams(
        s0=mkt.s0,
        strike=mkt.strike,
        rt=mkt.rt * ONE_DAY_FACTOR,
        sigma_t=mkt.sigma_t * math.sqrt(ONE_DAY_FACTOR),
    )
    base = price_call(dist, policy, mkt, cfg).value_at_zero
    grown = price_call(dist, policy, bumped, cfg).value_at_zero
    return grown - base


def finite_difference(
    f: Callable[[float], float],
    x: float,
    step: float,
    scheme: FdScheme = FdScheme.CENTRAL,
) -> float:
    """Plain first-derivative stencil used by the parameter sensitivities."""
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    if scheme is FdScheme.CENTRAL:
        return (f(x + step) - f(x - step)) / (2.0 * step)
    return (f(x + step) - f(x)) / step


def dprice_dnu(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: FdConfig = FdConfig(),
    quad_cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """dC0/dnu by finite difference, rebuilding the policy per bump."""
    if dist.is_normal:
        raise ValueError("the shape sensitivity requires finite nu")

    def call_at(nu: float) -> float:
        bumped_dist = ReturnDistribution(nu)
        bumped_policy = TailPolicy.from_probabilities(
            bumped_dist, policy.mode, p_c=policy.p_c, p_p=policy.p_p
        )
        return price_call(bumped_dist, bumped_policy, mkt, quad_cfg).value_at_zero

    return finite_difference(call_at, dist.nu, cfg.step * dist.nu, cfg.scheme)


def dprice_dp(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: FdConfig = FdConfig(),
    quad_cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """dC0/dp_c by one-sided difference, rebuilding x_c per bump.

    The step is cfg.step * (1 - p_c), so the bumped probability always
    stays below 1.
    """
    if policy.p_c >= 1.0:
        raise ValueError("the cap sensitivity requires p_c < 1")
    step = cfg.step * (1.0 - policy.p_c)

    def call_at(p_c: float) -> float:
        bumped_policy = TailPolicy.from_probabilities(
            dist, policy.mode, p_c=p_c, p_p=policy.p_p
        )
        return price_call(dist, bumped_policy, mkt, quad_cfg).value_at_zero

    return (call_at(policy.p_c + step) - call_at(policy.p_c)) / step


def greeks_report(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    fd: FdConfig = FdConfig(),
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> GreeksReport:
    """All call sensitivities for one parameter set."""
    if policy.mode is TailMode.CAPPED:
        delta = delta_capped(dist, policy, mkt, cfg)
        gamma = gamma_capped(dist, policy, mkt, cfg)
        vega = vega_capped(dist, policy, mkt, cfg)
    else:
        delta = delta_truncated(dist, policy, mkt, cfg)
        gamma = gamma_truncated(dist, policy, mkt, cfg)
        vega = vega_truncated(dist, policy, mkt, cfg)
    theta = theta_numeric(dist, policy, mkt, cfg)
    dc_dnu = None if dist.is_normal else dprice_dnu(dist, policy, mkt, fd, cfg)
    dc_dp = None if policy.p_c >= 1.0 else dprice_dp(dist, policy, mkt, fd, cfg)
    return GreeksReport(
        delta=delta, gamma=gamma, vega=vega, theta=theta, dc_dnu=dc_dnu, dc_dp=dc_dp
    )
