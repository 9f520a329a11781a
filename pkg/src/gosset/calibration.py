"""Shape-parameter calibration from windowed return volatilities.

The method: break a return series into non-overlapping windows, compute each
window's sample standard deviation before and after symmetrically dropping
the extreme observations, and place the ratio of mean volatilities on the
expected-volatility curve

    R(nu, p_N) = <sigma>(nu, p_N) / <sigma>(nu, 1),
    <sigma>(nu, p_N) = sqrt( int_{-x_c}^{x_c} xi^2 f(xi) dxi / p_N ),

whose inverse maps an observed ratio to an estimate of nu.  The curve is
increasing in nu and bounded by the normal-distribution value, so ratios at
or above that asymptote have no finite preimage.

The ratio estimator equals the curve only in the long-window limit; at short
windows the sorted-drop statistic sits above the curve (the extreme order
statistics of a small sample do not reach the population quantiles), so
calibration windows should be long enough that this finite-window effect is
small against the ratio's confidence interval.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy import optimize
from scipy.special import gammaln

from gosset.distributions import ChiParams, ReturnDistribution, chi_cdf, chi_pdf
from gosset.ingest import ReturnSeries, segment
from gosset.quadrature import (
    DEFAULT_CONFIG,
    Interval,
    QuadratureConfig,
    integrate_second_moment,
)

_NU_LOWER = 2.0


class NoSolutionError(RuntimeError):
    """No finite nu reproduces the observed ratio (it sits at or above the
    normal asymptote)."""


class NegativeVarianceError(ValueError):
    """The covariance term drove the propagated ratio variance negative."""


class FitTarget(enum.Enum):
    VOLATILITY = "volatility"
    RECIPROCAL_VOLATILITY = "reciprocal_volatility"


@dataclass(frozen=True)
class WindowStudy:
    """Per-window volatilities at each drop level plus their summaries.

    ``volatilities[d]`` holds one sample standard deviation per window after
    removing the d/2 smallest and d/2 largest observations; level 0 is always
    present.  ``ratios[d]`` is (mean_d / mean_0, 95% uncertainty) for d > 0,
    and ``covariances[d]`` the covariance between the level-d and level-0
    per-window volatilities (not of their means).
    """

    window_len: int
    n_windows: int
    drop_counts: Tuple[int, ...]
    volatilities: Dict[int, np.ndarray]
    mean: Dict[int, float]
    median: Dict[int, float]
    std: Dict[int, float]
    covariances: Dict[int, float]
    ratios: Dict[int, Tuple[float, float]]
    zero_variance_windows: int


@dataclass(frozen=True)
class CalibrationResult:
    nu_hat: float
    nu_ci: Tuple[float, float]
    ratios: Dict[int, Tuple[float, float]]
    method: str = "CURVE_MATCH"

    def __post_init__(self) -> None:
        lo, hi = self.nu_ci
        if not (lo <= self.nu_hat <= hi):
            raise ValueError(f"estimate {self.nu_hat} outside its interval [{lo}, {hi}]")


@dataclass(frozen=True)
class ChiFit:
    params: ChiParams
    target: FitTarget
    ks_statistic: float
    residual_ss: float
    bin_centers: np.ndarray
    bin_residuals: np.ndarray
    cdf_grid: np.ndarray
    cdf_empirical: np.ndarray
    cdf_fitted: np.ndarray


def expected_volatility(
    dist: ReturnDistribution,
    p_n: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """Standard deviation of the distribution truncated to coverage p_n.

    p_n = 1 uses the closed-form second moment (nu/(nu-2), or 1 for the
    normal kernel) and is rejected for nu <= 2 where it diverges.
    """
    if not (0.0 < p_n <= 1.0):
        raise ValueError(f"coverage must lie in (0, 1], got {p_n}")
    if p_n == 1.0:
        if dist.is_normal:
            return 1.0
        if dist.nu <= 2.0:
            raise ValueError(f"untruncated variance diverges for nu={dist.nu}")
        return math.sqrt(dist.nu / (dist.nu - 2.0))
    x_c = dist.two_sided_critical(p_n)
    # Symmetric integrand: integrate the half-line and double.
    second = 2.0 * integrate_second_moment(dist, Interval(0.0, x_c), cfg)
    return math.sqrt(second / p_n)


def _normalized_ratio(nu: float, p_n: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    dist = ReturnDistribution(nu)
    return expected_volatility(dist, p_n, cfg) / expected_volatility(dist, 1.0, cfg)


def normal_asymptote(p_n: float, cfg: QuadratureConfig = DEFAULT_CONFIG) -> float:
    """Large-nu limit of the normalized curve at coverage p_n."""
    return expected_volatility(ReturnDistribution(math.inf), p_n, cfg)


def normalized_vol_curve(
    nu_grid: Sequence[float],
    drop_fractions: Sequence[float],
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> Dict[float, List[float]]:
    """Normalized expected volatility per drop fraction over a nu grid.

    A drop fraction f corresponds to coverage p_N = 1 - f.  Each curve is
    strictly increasing in nu and approaches the normal asymptote from
    below.
    """
    curves: Dict[float, List[float]] = {}
    for f in drop_fractions:
        if not (0.0 < f < 1.0):
            raise ValueError(f"drop fraction must lie in (0, 1), got {f}")
        p_n = 1.0 - f
        curves[f] = [_normalized_ratio(nu, p_n, cfg) for nu in nu_grid]
    return curves


def _sorted_window_matrix(windows: Sequence[np.ndarray]) -> np.ndarray:
    return np.sort(np.vstack(windows), axis=1)


def _study_from_windows(
    sorted_windows: np.ndarray,
    window_len: int,
    drop_counts: Iterable[int],
) -> WindowStudy:
    levels = sorted({0, *drop_counts})
    for d in levels:
        if d < 0 or d % 2 != 0:
            raise ValueError(f"drop counts must be even and nonnegative, got {d}")
        if d >= window_len:
            raise ValueError(f"drop count {d} leaves no data in a window of {window_len}")

    n = sorted_windows.shape[0]
    vols: Dict[int, np.ndarray] = {}
    for d in levels:
        kept = sorted_windows[:, d // 2 : window_len - d // 2]
        vols[d] = kept.std(axis=1, ddof=1)

    full = vols[0]
    mean = {d: float(v.mean()) for d, v in vols.items()}
    median = {d: float(np.median(v)) for d, v in vols.items()}
    std = {d: float(v.std(ddof=1)) if n > 1 else 0.0 for d, v in vols.items()}
    if mean[0] == 0.0:
        raise ValueError("all windows have zero volatility; ratios are undefined")
    covariances: Dict[int, float] = {}
    ratios: Dict[int, Tuple[float, float]] = {}
    for d in levels:
        if d == 0:
            continue
        cov = float(np.cov(full, vols[d], ddof=1)[0, 1]) if n > 1 else 0.0
        covariances[d] = cov
        unc = ratio_uncertainty(
            mean_a=mean[0],
            s_a=std[0] / math.sqrt(n),
            mean_b=mean[d],
            s_b=std[d] / math.sqrt(n),
            s_ab=cov / n,
        )
        ratios[d] = (mean[d] / mean[0], unc)

    return WindowStudy(
        window_len=window_len,
        n_windows=n,
        drop_counts=tuple(levels),
        volatilities=vols,
        mean=mean,
        median=median,
        std=std,
        covariances=covariances,
        ratios=ratios,
        zero_variance_windows=int(np.count_nonzero(full == 0.0)),
    )


def window_volatilities(
    series: ReturnSeries,
    window_len: int,
    drop_counts: Sequence[int],
) -> WindowStudy:
    """Sorted-drop window volatilities of a historical series.

    Each non-overlapping window of ``window_len`` returns is sorted; the
    sample standard deviation of the middle values is recorded per drop
    level (d/2 removed from each end).
    """
    windows = segment(series, window_len)
    if not windows:
        raise ValueError(
            f"series of {len(series.returns)} returns is shorter than one "
            f"window of {window_len}"
        )
    matrix = _sorted_window_matrix(windows)
    return _study_from_windows(matrix, window_len, drop_counts)


def simulate_window_study(
    dist: ReturnDistribution,
    window_len: int,
    drop_counts: Sequence[int],
    n_trials: int,
    seed: int,
    scale: float = 1.0,
) -> WindowStudy:
    """Monte Carlo replica of the window study under iid draws from ``dist``.

    t variates are generated as Z / sqrt(V/nu) with Z standard normal and V
    chi-squared(nu) — the normal/chi mixture the model is built on — so the
    draws stay exact for non-integer nu.  ``scale`` multiplies every draw
    (e.g. sqrt(3) matches a normal to the variance of t(3)).
    """
    if n_trials < 1:
        raise ValueError(f"need at least one trial, got {n_trials}")
    if window_len < 2:
        raise ValueError(f"window length must be at least 2, got {window_len}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n_trials, window_len))
    if dist.is_normal:
        draws = z
    else:
        v = rng.chisquare(dist.nu, (n_trials, window_len))
        draws = z / np.sqrt(v / dist.nu)
    matrix = np.sort(draws * scale, axis=1)
    return _study_from_windows(matrix, window_len, drop_counts)


def ratio_uncertainty(
    mean_a: float,
    s_a: float,
    mean_b: float,
    s_b: float,
    s_ab: float,
    textbook: bool = False,
) -> float:
    """95% uncertainty (2 sigma) of the ratio B/A of two correlated means.

    Propagation with a single covariance term:

        s_{B/A}^2 = s_B^2/A^2 + s_A^2 (B/A^2)^2 - (B/A^3) s_AB

    where s_a / s_b are the standard errors of the two means and s_ab their
    covariance (itself, not a square root).  ``textbook=True`` doubles the
    covariance term, giving the conventional first-order formula.
    """
    if mean_a == 0.0:
        raise ValueError("ratio uncertainty is undefined for a zero denominator")
    a, b = mean_a, mean_b
    cov_factor = 2.0 if textbook else 1.0
    var = (
        (s_b * s_b) / (a * a)
        + (s_a * s_a) * (b / (a * a)) ** 2
        - cov_factor * (b / a**3) * s_ab
    )
    if var < 0.0:
        raise NegativeVarianceError(
            f"covariance term drove the ratio variance negative ({var})"
        )
    return 2.0 * math.sqrt(var)


def _invert_curve(
    ratio: float,
    p_n: float,
    asymptote: float,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> float:
    """nu with R(nu, p_n) = ratio; +inf when the ratio has no finite preimage."""
    if ratio >= asymptote:
        return math.inf
    if ratio <= 0.0:
        return _NU_LOWER
    lo = _NU_LOWER + 1e-9
    hi = 8.0
    while _normalized_ratio(hi, p_n, cfg) < ratio:
        hi *= 2.0
        if hi > 1e9:
            return math.inf
    return float(
        optimize.brentq(
            lambda nu: _normalized_ratio(nu, p_n, cfg) - ratio,
            lo,
            hi,
            xtol=1e-9,
            rtol=1e-10,
        )
    )


def estimate_nu(
    study: WindowStudy,
    cfg: QuadratureConfig = DEFAULT_CONFIG,
) -> CalibrationResult:
    """Estimate nu by inverting the normalized curve on each drop level.

    The point estimate combines the per-level inversions by inverse-variance
    weights (delta method: squared curve slope over squared ratio
    uncertainty); the confidence interval is the envelope of the per-level
    intervals, each obtained by mapping ratio +/- uncertainty through the
    curve inverse.  Raises :class:`NoSolutionError` when every level's ratio
    sits at or above the normal asymptote.
    """
    levels = [d for d in study.drop_counts if d > 0]
    if len(levels) < 2:
        raise ValueError("estimation needs at least two drop levels")

    estimates: List[Tuple[float, float, float]] = []  # (nu_hat, weight, slope)
    ci_lo: List[float] = []
    ci_hi: List[float] = []
    for d in levels:
        ratio, unc = study.ratios[d]
        if not (math.isfinite(ratio) and ratio > 0.0):
            continue
        p_n = (study.window_len - d) / study.window_len
        asym = normal_asymptote(p_n, cfg)
        nu_hat = _invert_curve(ratio, p_n, asym, cfg)
        lo = _invert_curve(max(ratio - unc, 1e-12), p_n, asym, cfg)
        hi = _invert_curve(ratio + unc, p_n, asym, cfg)
        if math.isfinite(lo):
            ci_lo.append(lo)
            ci_hi.append(hi)
        if not math.isfinite(nu_hat):
            continue
        delta = 1e-4 * nu_hat
        slope = (
            _normalized_ratio(nu_hat + delta, p_n, cfg)
            - _normalized_ratio(nu_hat - delta, p_n, cfg)
        ) / (2.0 * delta)
        weight = (slope / unc) ** 2 if unc > 0.0 else math.inf
        estimates.append((nu_hat, weight, slope))

    if not estimates:
        raise NoSolutionError(
            "every drop level's ratio is at or above the normal asymptote; "
            "no finite shape parameter matches"
        )

    weights = np.asarray([w for _, w, _ in estimates])
    if np.isinf(weights).any():
        weights = np.isinf(weights).astype(float)
    weights = weights / weights.sum()
    nu_hat = float(np.dot(weights, [n for n, _, _ in estimates]))

    lo = min(ci_lo) if ci_lo else _NU_LOWER
    hi = max(ci_hi) if ci_hi else math.inf
    # The envelope always brackets each per-level estimate; keep the
    # combined point inside it against roundoff.
    lo = min(lo, nu_hat)
    hi = max(hi, nu_hat)
    return CalibrationResult(nu_hat=nu_hat, nu_ci=(lo, hi), ratios=dict(study.ratios))


def _chi_profile_scale(samples_sq_mean: float, k: float) -> float:
    return math.sqrt(samples_sq_mean / k)


def fit_chi(
    samples: Sequence[float],
    target: FitTarget,
    method: str = "mle",
    bins: int = 40,
) -> ChiFit:
    """Fit a scaled chi distribution to positive samples.

    ``target=RECIPROCAL_VOLATILITY`` fits the reciprocals of the samples
    (the volatility's inverse is the chi-like quantity in the mixture
    model).  ``method="mle"`` profiles the scale analytically and maximizes
    the likelihood over k; ``method="binned_lsq"`` minimizes the squared
    histogram-density residuals starting from the MLE solution.
    """
    x = np.asarray(samples, dtype=float)
    if x.size < 30:
        raise ValueError(f"need at least 30 samples, got {x.size}")
    if np.any(~np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("samples must be finite and positive")
    if target is FitTarget.RECIPROCAL_VOLATILITY:
        x = 1.0 / x

    n = x.size
    sq_mean = float(np.mean(x * x))
    log_sum = float(np.sum(np.log(x)))

    def neg_loglik(k: float) -> float:
        s = _chi_profile_scale(sq_mean, k)
        val = n * ((1.0 - k / 2.0) * math.log(2.0) - gammaln(k / 2.0))
        val += (k - 1.0) * (log_sum - n * math.log(s)) - n * math.log(s)
        val -= 0.5 * n * k  # sum(x^2) / (2 s^2) at the profiled scale
        return -val

    res = optimize.minimize_scalar(
        neg_loglik, bounds=(0.05, 2000.0), method="bounded", options={"xatol": 1e-8}
    )
    if not res.success:
        raise RuntimeError(f"chi fit did not converge: {res.message}")
    k_hat = float(res.x)
    scale_hat = _chi_profile_scale(sq_mean, k_hat)

    hist, edges = np.histogram(x, bins=bins, density=True)
    centers = 0.5 * (edges[:-1] + edges[1:])

    if method == "binned_lsq":

        def rss(theta: np.ndarray) -> float:
            k, s = theta
            if k <= 0.0 or s <= 0.0:
                return math.inf
            return float(np.sum((hist - chi_pdf(ChiParams(k, s), centers)) ** 2))

        opt = optimize.minimize(
            rss, x0=np.array([k_hat, scale_hat]), method="Nelder-Mead"
        )
        if not opt.success:
            raise RuntimeError(f"binned fit did not converge: {opt.message}")
        k_hat, scale_hat = float(opt.x[0]), float(opt.x[1])
    elif method != "mle":
        raise ValueError(f"unknown fit method {method!r}")

    params = ChiParams(k=k_hat, scale=scale_hat)
    residuals = hist - chi_pdf(params, centers)

    x_sorted = np.sort(x)
    fitted = chi_cdf(params, x_sorted)
    ks_plus = np.max(np.arange(1, n + 1) / n - fitted)
    ks_minus = np.max(fitted - np.arange(0, n) / n)
    ks = float(max(ks_plus, ks_minus))

    # Downsample the cdf trace for reporting; the KS statistic above used
    # every point.
    keep = np.unique(np.linspace(0, n - 1, min(n, 512)).astype(int))
    return ChiFit(
        params=params,
        target=target,
        ks_statistic=ks,
        residual_ss=float(np.sum(residuals**2)),
        bin_centers=centers,
        bin_residuals=residuals,
        cdf_grid=x_sorted[keep],
        cdf_empirical=(np.arange(1, n + 1) / n)[keep],
        cdf_fitted=fitted[keep],
    )
