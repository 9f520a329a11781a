"""European option prices under capped or truncated t-distributed returns.

The terminal asset value is S_T = A_T * exp(sigma_T * xi).  Under a CAPPED
policy the terminal value is clamped at the critical returns x_p / x_c while
the tail probability mass stays put; under a TRUNCATED policy the return
support is restricted to [x_p, x_c] and renormalized by (p_c - p_p).  In
both cases A_T is fixed by the fair-wager condition E{S_T} = S0 * e^(rT),
which is also why put-call parity holds exactly:

    C_T - P_T = A_T * Z - K_T = S0 * e^(rT) - K_T.

Prices are reported both at expiry and discounted to t = 0.  The standard
Black-Scholes formulas are included as the infinite-nu reference.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.special import ndtr

from gosset.distributions import ReturnDistribution
from gosset.quadrature import (
    DEFAULT_CONFIG,
    Interval,
    QuadratureConfig,
    effective_bounds,
    integrate_exp_kernel,
)


class TailMode(enum.Enum):
    CAPPED = "capped"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class MarketParams:
    """Spot, strike, rate*time and volatility-to-expiry."""

    s0: float
    strike: float
    rt: float
    sigma_t: float

    def __post_init__(self) -> None:
        if not (self.s0 > 0.0):
            raise ValueError(f"spot must be positive, got {self.s0}")
        if self.strike < 0.0:
            raise ValueError(f"strike must be nonnegative, got {self.strike}")
        if not (self.sigma_t > 0.0):
            raise ValueError(f"sigma_t must be positive, got {self.sigma_t}")
        if not math.isfinite(self.rt):
            raise ValueError(f"rt must be finite, got {self.rt}")


@dataclass(frozen=True)
class TailPolicy:
    """Tail handling: mode plus floor/cap probabilities and critical values.

    Build via :meth:`from_probabilities` (the natural direction; the user
    chooses a confidence level) or :meth:`from_critical_values`.  p_p = 0
    means no floor (x_p = -inf); p_c = 1 (no cap) is valid only for
    TRUNCATED policies, since a capped integral diverges as x_c -> inf.
    """

    mode: TailMode
    p_p: float
    p_c: float
    x_p: float
    x_c: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_p < 1.0):
            raise ValueError(f"floor probability must lie in [0, 1), got {self.p_p}")
        if not (0.0 < self.p_c <= 1.0):
            raise ValueError(f"cap probability must lie in (0, 1], got {self.p_c}")
        if self.p_p >= self.p_c:
            raise ValueError(f"need p_p < p_c, got {self.p_p} >= {self.p_c}")
        if self.x_p >= self.x_c:
            raise ValueError(f"need x_p < x_c, got {self.x_p} >= {self.x_c}")
        if self.mode is TailMode.CAPPED and self.p_c >= 1.0:
            raise ValueError("a capped policy requires p_c < 1 (the cap payoff diverges)")

    @classmethod
    def from_probabilities(
        cls,
        dist: ReturnDistribution,
        mode: TailMode,
        p_c: float,
        p_p: float = 0.0,
    ) -> "TailPolicy":
        x_p = -math.inf if p_p == 0.0 else dist.quantile(p_p)
        x_c = math.inf if p_c == 1.0 else dist.quantile(p_c)
        return cls(mode=mode, p_p=p_p, p_c=p_c, x_p=x_p, x_c=x_c)

    @classmethod
    def from_critical_values(
        cls,
        dist: ReturnDistribution,
        mode: TailMode,
        x_c: float,
        x_p: float = -math.inf,
    ) -> "TailPolicy":
        p_p = 0.0 if math.isinf(x_p) else dist.cdf(x_p)
        p_c = 1.0 if math.isinf(x_c) else dist.cdf(x_c)
        return cls(mode=mode, p_p=p_p, p_c=p_c, x_p=x_p, x_c=x_c)

    def check_consistency(self, dist: ReturnDistribution) -> None:
        """The critical values must be the dist's quantiles of (p_p, p_c)."""
        if math.isfinite(self.x_p) and abs(dist.cdf(self.x_p) - self.p_p) > 1e-9:
            raise ValueError("policy floor is inconsistent with the distribution")
        if math.isfinite(self.x_c) and abs(dist.cdf(self.x_c) - self.p_c) > 1e-9:
            raise ValueError("policy cap is inconsistent with the distribution")

    def integration_interval(self, dist: ReturnDistribution) -> Interval:
        return effective_bounds(dist, self.x_p, self.x_c)


@dataclass(frozen=True)
class PriceQuote:
    """A price at expiry and at t = 0, with its normalization constants."""

    value_at_expiry: float
    value_at_zero: float
    z: float
    a_t: float


def z_capped(
    dist: ReturnDistribution,
    policy: TailPolicy,
    sigma_t: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """Normalization E{e^(sigma_T xi)} with clamped tails.

    cZ = p_p e^(sigma x_p) + int_{x_p}^{x_c} e^(sigma xi) f(xi) dxi
         + (1 - p_c) e^(sigma x_c).
    """
    if policy.mode is not TailMode.CAPPED:
        raise ValueError("z_capped requires a CAPPED policy")
    policy.check_consistency(dist)
    iv = policy.integration_interval(dist)
    z = integrate_exp_kernel(dist, sigma_t, iv, cfg)
    if policy.p_p > 0.0:
        z += policy.p_p * math.exp(sigma_t * policy.x_p)
    z += (1.0 - policy.p_c) * math.exp(sigma_t * policy.x_c)
    return z


def z_truncated(
    dist: ReturnDistribution,
    policy: TailPolicy,
    sigma_t: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """Normalization E{e^(sigma_T xi) | x_p <= xi <= x_c}."""
    if policy.mode is not TailMode.TRUNCATED:
        raise ValueError("z_truncated requires a TRUNCATED policy")
    policy.check_consistency(dist)
    iv = policy.integration_interval(dist)
    return integrate_exp_kernel(dist, sigma_t, iv, cfg) / (policy.p_c - policy.p_p)


def normalization(
    dist: ReturnDistribution,
    policy: TailPolicy,
    sigma_t: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    if policy.mode is TailMode.CAPPED:
        return z_capped(dist, policy, sigma_t, cfg)
    return z_truncated(dist, policy, sigma_t, cfg)


def martingale_A(mkt: MarketParams, z: float) -> float:
    """A_T = S0 e^(rT) / Z, the fair-wager normalization of S_T."""
    if not (z > 0.0):
        raise ValueError(f"normalization must be positive, got {z}")
    return mkt.s0 * math.exp(mkt.rt) / z


def _strike_return(mkt: MarketParams, a_t: float) -> float:
    # Return level where S_T crosses the strike: A_T e^(sigma d) = K.
    return math.log(mkt.strike / a_t) / mkt.sigma_t


def price_call(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> PriceQuote:
    """European call under the given tail policy.

    The integral's lower limit is ln(K/A_T)/sigma_T clamped into
    [x_p, x_c]: a strike below the floor leaves the whole support in the
    money (the floor payoff then enters in CAPPED mode), a strike above the
    cap leaves the call worthless.
    """
    z = normalization(dist, policy, sigma_t=mkt.sigma_t, cfg=cfg)
    a_t = martingale_A(mkt, z)
    sigma = mkt.sigma_t
    if mkt.strike == 0.0:
        value_t = mkt.s0 * math.exp(mkt.rt)
        return PriceQuote(value_t, mkt.s0, z, a_t)

    iv = policy.integration_interval(dist)
    d = _strike_return(mkt, a_t)
    lo = min(max(d, iv.lo), iv.hi)
    core = a_t * integrate_exp_kernel(dist, sigma, Interval(lo, iv.hi), cfg)
    core -= mkt.strike * (dist.cdf(iv.hi) - dist.cdf(lo))

    if policy.mode is TailMode.CAPPED:
        value_t = core
        cap_payoff = a_t * math.exp(sigma * policy.x_c) - mkt.strike
        if cap_payoff > 0.0:
            value_t += (1.0 - policy.p_c) * cap_payoff
        if policy.p_p > 0.0:
            floor_payoff = a_t * math.exp(sigma * policy.x_p) - mkt.strike
            if floor_payoff > 0.0:
                value_t += policy.p_p * floor_payoff
    else:
        value_t = core / (policy.p_c - policy.p_p)

    value_t = max(value_t, 0.0)
    return PriceQuote(value_t, value_t * math.exp(-mkt.rt), z, a_t)


def price_put(
    dist: ReturnDistribution,
    policy: TailPolicy,
    mkt: MarketParams,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> PriceQuote:
    """European put under the given tail policy; mirrors :func:`price_call`."""
    z = normalization(dist, policy, sigma_t=mkt.sigma_t, cfg=cfg)
    a_t = martingale_A(mkt, z)
    sigma = mkt.sigma_t
    if mkt.strike == 0.0:
        return PriceQuote(0.0, 0.0, z, a_t)

    iv = policy.integration_interval(dist)
    d = _strike_return(mkt, a_t)
    hi = min(max(d, iv.lo), iv.hi)
    core = mkt.strike * (dist.cdf(hi) - dist.cdf(iv.lo))
    core -= a_t * integrate_exp_kernel(dist, sigma, Interval(iv.lo, hi), cfg)

    if policy.mode is TailMode.CAPPED:
        value_t = core
        if policy.p_p > 0.0:
            floor_payoff = mkt.strike - a_t * math.exp(sigma * policy.x_p)
            if floor_payoff > 0.0:
                value_t += policy.p_p * floor_payoff
        cap_payoff = mkt.strike - a_t * math.exp(sigma * policy.x_c)
        if cap_payoff > 0.0:
            value_t += (1.0 - policy.p_c) * cap_payoff
    else:
        value_t = core / (policy.p_c - policy.p_p)

    value_t = max(value_t, 0.0)
    return PriceQuote(value_t, value_t * math.exp(-mkt.rt), z, a_t)


def black_scholes_call(mkt: MarketParams) -> float:
    """Black-Scholes call value at t = 0 (the nu = infinity reference)."""
    if mkt.strike == 0.0:
        return mkt.s0
    sigma = mkt.sigma_t
    d1 = (math.log(mkt.s0 / mkt.strike) + mkt.rt + 0.5 * sigma * sigma) / sigma
    d2 = d1 - sigma
    return mkt.s0 * ndtr(d1) - mkt.strike * math.exp(-mkt.rt) * ndtr(d2)


def black_scholes_put(mkt: MarketParams) -> float:
    """Black-Scholes put value at t = 0."""
    if mkt.strike == 0.0:
        return 0.0
    sigma = mkt.sigma_t
    d1 = (math.log(mkt.s0 / mkt.strike) + mkt.rt + 0.5 * sigma * sigma) / sigma
    d2 = d1 - sigma
    return mkt.strike * math.exp(-mkt.rt) * ndtr(-d2) - mkt.s0 * ndtr(-d1)
