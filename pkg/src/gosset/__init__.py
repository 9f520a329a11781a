"""Option pricing under fat-tailed (Student's t) log-returns.

The asset's terminal value is modelled as A_T * exp(sigma_T * xi) where xi
follows a Student's t distribution whose tails are either capped (payoff
clamped at critical returns) or truncated (support restricted and
renormalized).  The package provides the pricing kernels, analytic greeks,
the normal / Black-Scholes limit, and calibration of the shape parameter
from historical return series.
"""

from gosset.distributions import INFINITE, ChiParams, ReturnDistribution
from gosset.pricing import MarketParams, PriceQuote, TailMode, TailPolicy

__all__ = [
    "INFINITE",
    "ChiParams",
    "MarketParams",
    "PriceQuote",
    "ReturnDistribution",
    "TailMode",
    "TailPolicy",
]

__version__ = "0.1.0"
