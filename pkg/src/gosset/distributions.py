"""Probability kernels for the return model.

Student's t density, cdf, and quantile with the shape parameter ``nu`` as a
continuous real, plus ``nu = INFINITE`` dispatching to standard normal closed
forms (the Black-Scholes limit).  Chi and inverse-chi densities support the
volatility calibration diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

INFINITE = math.inf

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ReturnDistribution:
    """Symmetric return kernel: Student's t with ``nu`` degrees of freedom.

    ``nu = INFINITE`` selects the standard normal kernel exactly (closed
    forms, not a large-nu approximation), so the normal limit is available
    as an oracle rather than an asymptote.
    """

    nu: float

    def __post_init__(self) -> None:
        if not (self.nu > 0.0):
            raise ValueError(f"shape parameter must be positive, got {self.nu}")

    @property
    def is_normal(self) -> bool:
        return math.isinf(self.nu)

    def pdf(self, x):
        """Density at ``x`` (scalar or array)."""
        x = np.asarray(x, dtype=float)
        if self.is_normal:
            out = np.exp(-0.5 * x * x - _LOG_SQRT_2PI)
        else:
            nu = self.nu
            log_norm = (
                special.gammaln((nu + 1.0) / 2.0)
                - special.gammaln(nu / 2.0)
                - 0.5 * math.log(math.pi * nu)
            )
            out = np.exp(log_norm - 0.5 * (nu + 1.0) * np.log1p(x * x / nu))
        return out if out.ndim else float(out)

    def cdf(self, x):
        """P{xi <= x}, via the regularized incomplete beta for finite nu."""
        x = np.asarray(x, dtype=float)
        if self.is_normal:
            out = special.ndtr(x)
        else:
            nu = self.nu
            # One-sided tail mass: P{|xi| > |x|} = I_{nu/(nu+x^2)}(nu/2, 1/2)
            #                                    = 1 - I_{x^2/(nu+x^2)}(1/2, nu/2).
            # The first form is exact in the far tail but rounds nu/(nu+x^2)
            # to 1 when x^2 < nu*eps, flattening the cdf near zero; the
            # second form keeps the linear term there.  Switch at x^2 = nu.
            xx = x * x
            near = 0.5 * (1.0 - special.betainc(0.5, nu / 2.0, xx / (nu + xx)))
            far = 0.5 * special.betainc(nu / 2.0, 0.5, nu / (nu + xx))
            tail = np.where(xx <= nu, near, far)
            out = np.where(x <= 0.0, tail, 1.0 - tail)
        return out if out.ndim else float(out)

    def quantile(self, p: float) -> float:
        """Inverse cdf, safeguarded Newton with bisection fallback.

        Guarantees ``|cdf(quantile(p)) - p| <= 1e-12``.
        """
        if not (0.0 < p < 1.0):
            raise ValueError(f"probability must lie in (0, 1), got {p}")
        if self.is_normal:
            return float(special.ndtri(p))
        if p == 0.5:
            return 0.0
        if p < 0.5:
            return -self.quantile(1.0 - p)

        # Bracket [lo, hi] with cdf(lo) <= p <= cdf(hi).
        lo, hi = 0.0, 1.0
        while self.cdf(hi) < p:
            lo, hi = hi, hi * 2.0
            if hi > 1e308:
                raise ValueError(f"quantile bracket failed for p={p}")

        x = min(max(float(special.ndtri(p)), lo), hi)
        for _ in range(200):
            err = self.cdf(x) - p
            if abs(err) <= 1e-13:
                return x
            if err > 0.0:
                hi = x
            else:
                lo = x
            step = err / self.pdf(x)
            x_new = x - step
            if not (lo < x_new < hi):
                x_new = 0.5 * (lo + hi)
            x = x_new
        if abs(self.cdf(x) - p) <= 1e-12:
            return x
        raise ValueError(f"quantile did not converge for nu={self.nu}, p={p}")

    def two_sided_critical(self, p_n: float) -> float:
        """x_c with P{-x_c <= xi <= x_c} = p_n."""
        if not (0.0 < p_n < 1.0):
            raise ValueError(f"coverage probability must lie in (0, 1), got {p_n}")
        return self.quantile((1.0 + p_n) / 2.0)


@dataclass(frozen=True)
class ChiParams:
    """Chi distribution with ``k`` degrees of freedom and a scale in the
    units of the fitted variable (raw volatilities carry units, so the
    textbook unit-scale chi is not enough)."""

    k: float
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not (self.k > 0.0):
            raise ValueError(f"degrees of freedom must be positive, got {self.k}")
        if not (self.scale > 0.0):
            raise ValueError(f"scale must be positive, got {self.scale}")


def chi_pdf(params: ChiParams, x):
    """Chi density; zero for x <= 0."""
    x = np.asarray(x, dtype=float)
    k, scale = params.k, params.scale
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.where(x > 0.0, x / scale, 1.0)
        log_pdf = (
            (1.0 - k / 2.0) * math.log(2.0)
            - special.gammaln(k / 2.0)
            + (k - 1.0) * np.log(u)
            - 0.5 * u * u
            - math.log(scale)
        )
        out = np.where(x > 0.0, np.exp(log_pdf), 0.0)
    return out if out.ndim else float(out)


def inverse_chi_pdf(params: ChiParams, x):
    """Density of Y = scale / X with X a unit-scale chi(k) variate.

    Change of variables: f_Y(y) = f_X(scale/y) * scale / y^2.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("inverse-chi density requires x > 0")
    unit = ChiParams(params.k, 1.0)
    out = chi_pdf(unit, params.scale / x) * params.scale / (x * x)
    return out if out.ndim else float(out)


def chi_cdf(params: ChiParams, x):
    """Chi cdf, used by fit diagnostics; zero for x <= 0."""
    x = np.asarray(x, dtype=float)
    u = np.where(x > 0.0, x / params.scale, 0.0)
    out = np.where(x > 0.0, special.gammainc(params.k / 2.0, 0.5 * u * u), 0.0)
    return out if out.ndim else float(out)
