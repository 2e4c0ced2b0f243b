# -*- coding: utf-8 -*-

"""Fitting the additive and multiplicative mean-reverting models to price series."""

import math
import logging
from typing import Dict, NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize, stats

from .constants import (
    DEFAULT_DECAY_GUARD,
    DEFAULT_HISTOGRAM_BINS,
    DEFAULT_MAX_DECAY_FIT_LAG,
)
from .sde import NoiseKind, SdeParams, mn_stationary_pdf
from .series import PriceSeries

logger = logging.getLogger("bandwidth_market.estimate")

DENSITY_FAMILIES = ("normal", "eq4")


class EstimationError(ValueError):
    pass


class DegenerateSeriesError(EstimationError):
    pass


class UnidentifiableError(EstimationError):
    pass


class DecayDiagnostics(NamedTuple):
    """
    Lag-indexed curves, index k = 0..k_max:
    `y` the averaged ratio (Ŝ(i+k) − μ̂)/(Ŝ(i) − μ̂), `alpha` = −log(y)/(kΔt),
    `autocov` the lag-k sample autocovariance around μ̂, and `excluded` the
    number of terms dropped because Ŝ(i) was too close to μ̂.

    `autocov` divides by n at every lag (not n − k), so `autocorr` is a
    positive semidefinite sequence. The variance in `estimate_ou` divides by
    n − 1 instead.
    """

    lags: np.ndarray
    y: np.ndarray
    y_stderr: np.ndarray
    alpha: np.ndarray
    autocov: np.ndarray
    excluded: np.ndarray
    dt: float

    @property
    def autocorr(self) -> np.ndarray:
        return self.autocov / self.autocov[0]


class ModelFit(NamedTuple):
    """
    Fitted parameters and the implied noise increments. Fits that estimate
    the reversion rate from the decay curve also keep that curve and the
    lag window the rate was fitted over.
    """

    params: SdeParams
    residuals: np.ndarray
    decay: Optional[DecayDiagnostics] = None
    k_fit: Optional[int] = None


class DensityFit(NamedTuple):
    family: str
    params: Dict[str, float]
    fit_error: float
    bin_centers: np.ndarray
    heights: np.ndarray
    fitted: np.ndarray


class NormalitySummary(NamedTuple):
    mean: float
    std: float
    skewness: float
    excess_kurtosis: float
    ks_distance: float
    ks_pvalue: float


class EstimationReport(NamedTuple):
    label: str
    params: SdeParams
    residuals: np.ndarray
    decay: DecayDiagnostics
    k_fit: int
    density_fit: DensityFit
    residual_fit: DensityFit
    normality: NormalitySummary


def _check_length(series: PriceSeries, minimum: int):
    if len(series.values) < minimum:
        raise DegenerateSeriesError(
            f"{series.label}: need at least {minimum} observations, got {len(series.values)}"
        )


def _residuals(series: PriceSeries, params: SdeParams) -> np.ndarray:
    s = series.values[:-1]
    increments = np.diff(series.values)
    drift = params.alpha * (params.mu - s) * series.dt
    scale = params.sigma * (s if params.kind == NoiseKind.MULTIPLICATIVE else 1.0)
    return (increments - drift) / scale


def estimate_ou(series: PriceSeries) -> ModelFit:
    """
    Moment estimates for the additive-noise model:
    μ̂ the sample mean, σ̂² = Σ(ΔŜ)²/((L−1)Δt), and α̂ = σ̂²/(2V̂) with V̂ the
    unbiased sample variance. Residuals are the implied Wiener increments ΔŴ.

    Raises:
        DegenerateSeriesError for series shorter than 3 or with zero variance
    """
    _check_length(series, 3)
    values, dt = series.values, series.dt

    mu = float(np.mean(values))
    sigma2 = float(np.sum(np.diff(values) ** 2) / ((len(values) - 1) * dt))
    variance = float(np.var(values, ddof=1))
    if variance == 0 or sigma2 == 0:
        raise DegenerateSeriesError(
            f"{series.label}: series is constant, mean reversion rate undefined"
        )

    params = SdeParams(NoiseKind.ADDITIVE, sigma2 / (2 * variance), mu, math.sqrt(sigma2))
    return ModelFit(params, _residuals(series, params))


def decay_diagnostics(
    series: PriceSeries,
    mu: float,
    k_max: int = DEFAULT_MAX_DECAY_FIT_LAG,
    guard: float = DEFAULT_DECAY_GUARD,
) -> DecayDiagnostics:
    """
    Estimate e^{−αkΔt} by averaging (Ŝ(i+k) − μ̂)/(Ŝ(i) − μ̂) over i, for k = 0..k_max.

    Terms whose denominator lies within `guard` sample standard deviations of
    μ̂ are dropped; the ratio is unstable there. The standard error of ŷ(k) is
    sd(terms)·√(k/n), allowing for overlapping windows.
    """
    values, dt = series.values, series.dt
    n = len(values)
    if not 0 < k_max < n:
        raise EstimationError(f"{series.label}: lag count must be in 1..{n - 1}, got {k_max}")

    sd = float(np.std(values, ddof=1))
    if sd == 0:
        raise DegenerateSeriesError(f"{series.label}: series is constant")

    centered = values - mu
    keep = np.abs(centered) >= guard * sd

    lags = np.arange(k_max + 1)
    y = np.full(k_max + 1, np.nan)
    y_stderr = np.full(k_max + 1, np.nan)
    autocov = np.empty(k_max + 1)
    excluded = np.zeros(k_max + 1, dtype=int)
    y[0], y_stderr[0] = 1.0, 0.0

    for k in lags:
        autocov[k] = np.mean(centered[k:] * centered[: n - k])
        if k == 0:
            continue
        mask = keep[: n - k]
        excluded[k] = int((~mask).sum())
        terms = centered[k:][mask] / centered[: n - k][mask]
        if len(terms):
            y[k] = terms.mean()
            y_stderr[k] = terms.std() * math.sqrt(k / len(terms))

    share = excluded[1:].sum() / max(1, sum(n - k for k in lags[1:]))
    if share > 0.05:
        logger.warning(
            f"{series.label}: guard excluded {share:.1%} of decay ratio terms"
        )
    else:
        logger.debug(f"{series.label}: guard excluded {share:.1%} of decay ratio terms")

    with np.errstate(divide="ignore", invalid="ignore"):
        alpha = np.where(y > 0, -np.log(y) / (lags * dt), np.nan)
    alpha[0] = np.nan

    return DecayDiagnostics(lags, y, y_stderr, alpha, autocov, excluded, dt)


def decay_fit_window(decay: DecayDiagnostics, cap: int = DEFAULT_MAX_DECAY_FIT_LAG) -> int:
    """
    Largest k such that ŷ(1..k) all exceed three standard errors, capped at `cap`.
    Falls back to the largest k with ŷ(k) > 0 when even ŷ(1) is within noise.

    Raises:
        UnidentifiableError if no ŷ(k) in the window is positive
    """
    k_limit = min(cap, len(decay.lags) - 1)
    k_fit = 0
    for k in range(1, k_limit + 1):
        if not decay.y[k] > 3 * decay.y_stderr[k]:
            break
        k_fit = k

    if k_fit == 0:
        positive = [k for k in range(1, k_limit + 1) if decay.y[k] > 0]
        if not positive:
            raise UnidentifiableError(
                "decay curve is non-positive over the whole fit window"
            )
        k_fit = positive[-1]
    return k_fit


def fit_decay_rate(decay: DecayDiagnostics, k_fit: int) -> float:
    """Least-squares slope through the origin of −log ŷ(k) against kΔt, k = 1..k_fit."""
    ks = np.arange(1, k_fit + 1)
    y = decay.y[ks]
    usable = y > 0
    if not usable.any():
        raise UnidentifiableError(f"decay curve is non-positive for k in 1..{k_fit}")

    x = ks[usable] * decay.dt
    target = -np.log(y[usable])
    return float(np.dot(x, target) / np.dot(x, x))


def log_volatility(series: PriceSeries) -> float:
    """σ̂ = √(Σ(log(Ŝ(i+1)/Ŝ(i)))²/((L−1)Δt)), the volatility of the multiplicative model."""
    if np.any(series.values <= 0):
        raise EstimationError(
            f"{series.label}: multiplicative model needs positive prices"
        )
    log_increments = np.diff(np.log(series.values))
    return math.sqrt(np.sum(log_increments ** 2) / (len(log_increments) * series.dt))


def estimate_mn(
    series: PriceSeries,
    k_fit: Optional[int] = None,
    k_max: int = DEFAULT_MAX_DECAY_FIT_LAG,
    guard: float = DEFAULT_DECAY_GUARD,
) -> ModelFit:
    """
    Estimates for the multiplicative-noise model: μ̂ the sample mean,
    σ̂² = Σ(log(Ŝ(i+1)/Ŝ(i)))²/((L−1)Δt), and α̂ from the decay of the
    conditional expectation over lags 1..k_fit (chosen by `decay_fit_window`
    when not given).

    Raises:
        EstimationError for non-positive values or a fit window longer than the series
        UnidentifiableError for constant series or a non-positive decay curve
    """
    _check_length(series, 3)
    values = series.values
    sigma = log_volatility(series)
    mu = float(np.mean(values))
    if sigma == 0 or np.var(values) == 0:
        raise UnidentifiableError(
            f"{series.label}: series is constant, mean reversion rate unidentifiable"
        )

    if k_fit is not None and not 0 < k_fit < len(values):
        raise EstimationError(
            f"{series.label}: fit window must be in 1..{len(values) - 1}, got {k_fit}"
        )
    decay = decay_diagnostics(
        series, mu, min(max(k_max, k_fit or 0), len(values) - 1), guard
    )
    if k_fit is None:
        k_fit = decay_fit_window(decay, k_max)
    alpha = fit_decay_rate(decay, k_fit)
    if not alpha > 0:
        raise UnidentifiableError(
            f"{series.label}: decay fit gives a non-positive rate {alpha}"
        )

    params = SdeParams(NoiseKind.MULTIPLICATIVE, alpha, mu, sigma)
    return ModelFit(params, _residuals(series, params), decay, k_fit)


def correlation_matrix(
    residuals: Sequence[np.ndarray], literal: bool = False, dt: Optional[float] = None
) -> np.ndarray:
    """
    Pairwise Pearson correlation of residual streams, exactly symmetric with a
    unit diagonal.

    With `literal` set, returns (1/(L−1))·ΣΔŴ_iΔŴ_j/Δt² instead, a mean
    product scaled by Δt² that is not a correlation in general.
    """
    streams = [np.asarray(r, dtype=float) for r in residuals]
    if not streams:
        raise EstimationError("no residual streams given")
    lengths = {len(r) for r in streams}
    if len(lengths) != 1:
        raise EstimationError(f"residual streams have different lengths {sorted(lengths)}")
    if lengths.pop() < 2:
        raise EstimationError("residual streams need at least 2 values")

    stacked = np.vstack(streams)
    if literal:
        if dt is None:
            raise EstimationError("the literal normalization needs the time step")
        return stacked @ stacked.T / stacked.shape[1] / dt ** 2

    flat = [i for i, r in enumerate(streams) if np.std(r) == 0]
    if flat:
        raise EstimationError(
            f"residual streams {flat} have zero variance; their correlations are undefined"
        )

    rho = np.corrcoef(stacked)
    rho = np.clip((rho + rho.T) / 2, -1.0, 1.0)
    np.fill_diagonal(rho, 1.0)
    return rho


def _normal_model(x, loc, scale):
    return stats.norm.pdf(x, loc, scale)


def fit_histogram(
    centers: np.ndarray,
    heights: np.ndarray,
    family: str,
    mu: Optional[float] = None,
    sigma: Optional[float] = None,
    p0: Optional[Sequence[float]] = None,
) -> DensityFit:
    """
    Least-squares fit of a stationary density to histogram bar heights.

    The "normal" family fits location and scale, which identifies μ and
    σ/√(2α) but not σ and α separately. The "eq4" family fixes μ and σ
    (both required) and fits α in the multiplicative stationary density.
    """
    centers = np.asarray(centers, dtype=float)
    heights = np.asarray(heights, dtype=float)

    if family == "normal":
        if p0 is None:
            weights = heights / heights.sum()
            loc0 = float(np.dot(weights, centers))
            scale0 = float(np.sqrt(np.dot(weights, (centers - loc0) ** 2))) or 1.0
            p0 = (loc0, scale0)
        (loc, scale), _ = optimize.curve_fit(
            _normal_model, centers, heights, p0=p0, bounds=([-np.inf, 1e-12], [np.inf, np.inf])
        )
        fitted = _normal_model(centers, loc, scale)
        params = {
            "mu": float(loc),
            "stationary_sd": float(scale),
            "sigma2_over_alpha": float(2 * scale ** 2),
        }

    elif family == "eq4":
        if mu is None or sigma is None:
            raise EstimationError("the eq4 family needs μ and σ fixed in advance")

        def model(x, alpha):
            return mn_stationary_pdf(x, SdeParams(NoiseKind.MULTIPLICATIVE, alpha, mu, sigma))

        if p0 is None:
            weights = heights / heights.sum()
            variance = float(np.dot(weights, (centers - mu) ** 2))
            gamma0 = 1 + mu ** 2 / variance if variance > 0 else 10.0
            p0 = (gamma0 * sigma ** 2 / 2,)
        (alpha,), _ = optimize.curve_fit(
            model, centers, heights, p0=p0, bounds=([1e-12], [np.inf])
        )
        fitted = model(centers, alpha)
        params = {
            "alpha": float(alpha),
            "mu": float(mu),
            "sigma": float(sigma),
            "gamma": float(2 * alpha / sigma ** 2),
        }

    else:
        raise EstimationError(
            f"unknown density family {family!r}, expected one of {DENSITY_FAMILIES}"
        )

    fit_error = float(np.sum((fitted - heights) ** 2))
    return DensityFit(family, params, fit_error, centers, heights, np.asarray(fitted))


def histogram(values: np.ndarray, n_bins: int = DEFAULT_HISTOGRAM_BINS):
    """Equal-width density histogram over [min, max]; returns (centers, heights)."""
    if n_bins < 2:
        raise EstimationError(f"need at least 2 bins, got {n_bins}")
    values = np.asarray(values, dtype=float)
    if len(values) < n_bins:
        raise EstimationError(
            f"{len(values)} observations are too few for {n_bins} bins"
        )
    heights, edges = np.histogram(values, bins=n_bins, density=True)
    return (edges[:-1] + edges[1:]) / 2, heights


def fit_density(
    series: PriceSeries,
    family: str,
    n_bins: int = DEFAULT_HISTOGRAM_BINS,
    mu: Optional[float] = None,
    sigma: Optional[float] = None,
) -> DensityFit:
    """
    Fit a stationary density to the histogram of `series`. For "eq4", μ and σ
    default to the moment estimates (sample mean and log-increment volatility).
    """
    if family not in DENSITY_FAMILIES:
        raise EstimationError(
            f"unknown density family {family!r}, expected one of {DENSITY_FAMILIES}"
        )
    centers, heights = histogram(series.values, n_bins)

    if family == "eq4":
        if np.any(series.values <= 0):
            raise EstimationError(f"{series.label}: eq4 density needs positive prices")
        if mu is None:
            mu = float(np.mean(series.values))
        if sigma is None:
            sigma = log_volatility(series)

    return fit_histogram(centers, heights, family, mu=mu, sigma=sigma)


def normality_summary(residuals: np.ndarray) -> NormalitySummary:
    """Skewness, excess kurtosis and KS distance of residuals to their best-fit normal."""
    residuals = np.asarray(residuals, dtype=float)
    mean = float(np.mean(residuals))
    std = float(np.std(residuals, ddof=1))
    if std == 0:
        raise DegenerateSeriesError("residuals have zero variance")

    ks = stats.kstest(residuals, "norm", args=(mean, std))
    return NormalitySummary(
        mean=mean,
        std=std,
        skewness=float(stats.skew(residuals)),
        excess_kurtosis=float(stats.kurtosis(residuals)),
        ks_distance=float(ks.statistic),
        ks_pvalue=float(ks.pvalue),
    )


def estimate_series(
    series: PriceSeries,
    model: NoiseKind,
    n_bins: int = DEFAULT_HISTOGRAM_BINS,
    k_max: int = DEFAULT_MAX_DECAY_FIT_LAG,
    guard: float = DEFAULT_DECAY_GUARD,
    k_fit: Optional[int] = None,
) -> EstimationReport:
    """Fit `model` to `series` and collect every diagnostic into one report."""
    k_max = min(k_max, len(series.values) - 1)
    if model == NoiseKind.ADDITIVE:
        fit = estimate_ou(series)
        decay = decay_diagnostics(series, fit.params.mu, k_max, guard)
        try:
            window = decay_fit_window(decay, k_max)
        except UnidentifiableError:
            window = 0
        density_fit = fit_density(series, "normal", n_bins)
    else:
        fit = estimate_mn(series, k_fit=k_fit, k_max=k_max, guard=guard)
        decay, window = fit.decay, fit.k_fit
        density_fit = fit_density(
            series, "eq4", n_bins, mu=fit.params.mu, sigma=fit.params.sigma
        )

    residual_series = series._replace(values=fit.residuals)
    residual_fit = fit_density(residual_series, "normal", n_bins)
    report = EstimationReport(
        label=series.label,
        params=fit.params,
        residuals=fit.residuals,
        decay=decay,
        k_fit=window,
        density_fit=density_fit,
        residual_fit=residual_fit,
        normality=normality_summary(fit.residuals),
    )
    logger.info(
        f"{series.label}: {model.value} fit alpha={fit.params.alpha:.4g} "
        f"mu={fit.params.mu:.4g} sigma={fit.params.sigma:.4g}"
    )
    return report
