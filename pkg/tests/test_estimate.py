#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Tests for model calibration from price series."""

import math

import numpy as np
import pytest
from scipy import stats

from bandwidth_market.estimate import (
    DegenerateSeriesError,
    EstimationError,
    UnidentifiableError,
    correlation_matrix,
    decay_diagnostics,
    decay_fit_window,
    estimate_mn,
    estimate_ou,
    estimate_series,
    fit_decay_rate,
    fit_density,
    fit_histogram,
    histogram,
    log_volatility,
    normality_summary,
)
from bandwidth_market.sde import NoiseKind, mn, mn_stationary_pdf, ou, simulate_path
from bandwidth_market.series import SeriesError, price_series


@pytest.fixture(scope="module")
def ou_path():
    return simulate_path(ou(5.0, 10.0, 1.0), L=100_000, dt=0.01, seed=21)


@pytest.fixture(scope="module")
def ou_long():
    return simulate_path(ou(5.0, 10.0, 1.0), L=1_000_000, dt=0.01, seed=23)


@pytest.fixture(scope="module")
def mn_path():
    return simulate_path(mn(5.0, 10.0, 0.3), L=1_000_000, dt=0.01, seed=22)


def test_price_series_validation():
    with pytest.raises(SeriesError, match="at least 2"):
        price_series([1.0], 0.1)
    with pytest.raises(SeriesError, match="non-finite"):
        price_series([1.0, np.nan], 0.1)
    with pytest.raises(SeriesError, match="time step"):
        price_series([1.0, 2.0], 0.0)
    with pytest.raises(SeriesError, match="not numeric"):
        price_series(["a", "b"], 0.1)


def test_price_series_replace():
    """Derived series keep their time step and label"""
    series = price_series(np.arange(1.0, 11.0), 0.5, "S_4")
    shifted = series.shift(2.0)
    assert shifted.dt == 0.5
    assert shifted.label == "S_4"
    assert np.array_equal(shifted.values, np.arange(3.0, 13.0))

    residuals = series._replace(values=np.zeros(9))
    assert residuals.label == "S_4"
    assert len(residuals.values) == 9


def test_estimate_ou_small():
    fit = estimate_ou(price_series([1.0, 2.0, 3.0], 1.0))
    assert fit.params.kind == NoiseKind.ADDITIVE
    assert fit.params.mu == 2.0
    assert len(fit.residuals) == 2

    with pytest.raises(DegenerateSeriesError, match="constant"):
        estimate_ou(price_series([4.0] * 10, 1.0))
    with pytest.raises(DegenerateSeriesError, match="at least 3"):
        estimate_ou(price_series([1.0, 2.0], 1.0))


def test_estimate_ou_recovery(ou_path):
    fit = estimate_ou(ou_path)
    assert fit.params.mu == pytest.approx(10.0, rel=0.02)
    assert fit.params.sigma == pytest.approx(1.0, rel=0.02)
    assert fit.params.alpha == pytest.approx(5.0, rel=0.1)

    # residuals behave like Wiener increments over dt
    residuals = fit.residuals
    assert len(residuals) == len(ou_path.values) - 1
    stderr = math.sqrt(0.01 / len(residuals))
    assert abs(residuals.mean()) < 3 * stderr
    assert residuals.var() == pytest.approx(0.01, rel=0.05)


def test_estimate_ou_translation(ou_path):
    fit = estimate_ou(ou_path)
    shifted = estimate_ou(ou_path.shift(25.0))
    assert shifted.params.mu == pytest.approx(fit.params.mu + 25.0)
    assert shifted.params.sigma == pytest.approx(fit.params.sigma, rel=1e-9)
    assert shifted.params.alpha == pytest.approx(fit.params.alpha, rel=1e-9)


def test_estimate_ou_consistency():
    """Errors shrink as the series grows"""
    p = ou(5.0, 10.0, 1.0)
    errors = []
    for L in (1_000, 10_000, 100_000):
        alphas = [
            estimate_ou(simulate_path(p, L=L, dt=0.01, seed=seed)).params.alpha
            for seed in range(5)
        ]
        errors.append(np.mean(np.abs(np.array(alphas) - 5.0)))
    assert errors[0] > errors[1] > errors[2]


def test_estimate_mn_recovery(mn_path):
    fit = estimate_mn(mn_path)
    assert fit.params.kind == NoiseKind.MULTIPLICATIVE
    assert fit.params.mu == pytest.approx(10.0, rel=0.02)
    assert fit.params.sigma == pytest.approx(0.3, rel=0.03)
    assert fit.params.alpha == pytest.approx(5.0, rel=0.15)

    residuals = fit.residuals
    stderr = math.sqrt(0.01 / len(residuals))
    assert abs(residuals.mean()) < 3 * stderr
    assert residuals.var() == pytest.approx(0.01, rel=0.05)


def test_log_volatility_of_geometric_series():
    r, dt = 1.01, 0.5
    series = price_series(3.0 * r ** np.arange(50), dt)
    assert log_volatility(series) == pytest.approx(math.log(r) / math.sqrt(dt))

    with pytest.raises(EstimationError, match="positive prices"):
        log_volatility(price_series([2.0, 0.0, 1.0], dt))


def test_estimate_mn_errors():
    with pytest.raises(UnidentifiableError, match="constant"):
        estimate_mn(price_series([5.0] * 20, 0.1))
    with pytest.raises(EstimationError, match="positive prices"):
        estimate_mn(price_series([1.0, -1.0, 2.0, 3.0], 0.1))


def test_decay_of_exact_exponential():
    """A noise-free approach to the mean decays at exactly e^{-alpha k dt}"""
    alpha, mu, dt = 5.0, 10.0, 0.01
    values = mu + 10.0 * np.exp(-alpha * dt * np.arange(400))
    series = price_series(values, dt)
    decay = decay_diagnostics(series, mu, k_max=20, guard=0.0)

    ks = np.arange(21)
    assert np.allclose(decay.y, np.exp(-alpha * ks * dt))
    assert np.allclose(decay.alpha[1:], alpha)
    assert math.isnan(decay.alpha[0])
    assert fit_decay_rate(decay, 20) == pytest.approx(alpha)


def test_decay_rates_recover_alpha(ou_long):
    mu = float(np.mean(ou_long.values))
    decay = decay_diagnostics(ou_long, mu, k_max=10)
    assert decay.alpha[1:] == pytest.approx(np.full(10, 5.0), rel=0.15)


def test_decay_diagnostics_curves(ou_path):
    mu = float(np.mean(ou_path.values))
    decay = decay_diagnostics(ou_path, mu, k_max=20)

    assert decay.y[0] == 1.0
    assert decay.autocov[0] == pytest.approx(np.var(ou_path.values))
    assert decay.autocorr[0] == pytest.approx(1.0)

    # autocovariance decays like Var * e^{-alpha k dt}
    variance = decay.autocov[0]
    n_eff = len(ou_path.values) * 0.01 * 5.0
    for k in range(1, 21):
        expected = variance * math.exp(-5.0 * k * 0.01)
        assert abs(decay.autocov[k] - expected) < 3 * variance * math.sqrt(2 / n_eff)


def test_decay_guard_excludes_terms(ou_path):
    mu = float(np.mean(ou_path.values))
    loose = decay_diagnostics(ou_path, mu, k_max=5, guard=0.0)
    tight = decay_diagnostics(ou_path, mu, k_max=5, guard=0.5)
    assert np.all(loose.excluded == 0)
    assert np.all(tight.excluded[1:] > 0)
    assert tight.excluded[0] == 0

    with pytest.raises(EstimationError, match="lag count"):
        decay_diagnostics(price_series([1.0, 2.0, 3.0], 0.1), 2.0, k_max=3)


def test_decay_fit_window(mn_path):
    mu = float(np.mean(mn_path.values))
    decay = decay_diagnostics(mn_path, mu, k_max=40)
    k_fit = decay_fit_window(decay, cap=20)
    assert 1 <= k_fit <= 20
    assert decay_fit_window(decay, cap=3) <= 3


def test_correlation_matrix():
    rng = np.random.default_rng(0)
    a, b, c = rng.standard_normal((3, 100_000))

    rho = correlation_matrix([a, a, -a])
    assert np.allclose(rho, [[1, 1, -1], [1, 1, -1], [-1, -1, 1]])

    rho = correlation_matrix([a, b, c])
    assert np.array_equal(rho, rho.T)
    assert np.all(np.diag(rho) == 1.0)
    assert np.all(np.abs(rho[np.triu_indices(3, 1)]) < 0.02)

    # Pearson correlation ignores positive rescaling
    assert np.allclose(correlation_matrix([3.0 * a, b, c]), rho)


def test_correlation_matrix_errors():
    with pytest.raises(EstimationError, match="zero variance"):
        correlation_matrix([np.ones(10), np.arange(10.0)])
    with pytest.raises(EstimationError, match="different lengths"):
        correlation_matrix([np.ones(10), np.ones(5)])
    with pytest.raises(EstimationError, match="no residual"):
        correlation_matrix([])
    with pytest.raises(EstimationError, match="time step"):
        correlation_matrix([np.arange(3.0)], literal=True)


def test_literal_correlation():
    """The mean-product normalization does not produce a correlation"""
    a = np.array([0.1, -0.2, 0.3, -0.1])
    rho = correlation_matrix([a, 2 * a], literal=True, dt=0.1)
    assert rho[0, 0] == pytest.approx(np.mean(a * a) / 0.01)
    assert rho[0, 1] == pytest.approx(2 * np.mean(a * a) / 0.01)


def test_histogram():
    centers, heights = histogram(np.linspace(0, 1, 150), n_bins=15)
    assert len(centers) == len(heights) == 15
    assert np.sum(heights * (centers[1] - centers[0])) == pytest.approx(1.0)

    with pytest.raises(EstimationError, match="too few"):
        histogram(np.arange(5.0), n_bins=15)
    with pytest.raises(EstimationError, match="at least 2 bins"):
        histogram(np.arange(50.0), n_bins=1)


def test_fit_normal_self_consistency():
    centers = np.linspace(7, 13, 15)
    heights = stats.norm.pdf(centers, 10.0, 0.8)
    fit = fit_histogram(centers, heights, "normal")
    assert fit.params["mu"] == pytest.approx(10.0, rel=1e-6)
    assert fit.params["stationary_sd"] == pytest.approx(0.8, rel=1e-6)
    assert fit.params["sigma2_over_alpha"] == pytest.approx(2 * 0.64, rel=1e-5)
    assert fit.fit_error == pytest.approx(0.0, abs=1e-12)


def test_fit_eq4_self_consistency():
    p = mn(1.0, 10.0, 0.5)
    centers = np.linspace(4, 25, 15)
    heights = mn_stationary_pdf(centers, p)
    fit = fit_histogram(centers, heights, "eq4", mu=10.0, sigma=0.5)
    assert fit.params["alpha"] == pytest.approx(1.0, rel=1e-5)
    assert fit.params["gamma"] == pytest.approx(8.0, rel=1e-5)
    assert fit.fit_error == pytest.approx(0.0, abs=1e-12)

    with pytest.raises(EstimationError, match="fixed in advance"):
        fit_histogram(centers, heights, "eq4")
    with pytest.raises(EstimationError, match="unknown density family"):
        fit_histogram(centers, heights, "lognormal")


def test_fit_density_normal_samples():
    rng = np.random.default_rng(3)
    series = price_series(rng.normal(10.0, 1.0, 20_000), 0.01)
    fit = fit_density(series, "normal")
    assert len(fit.bin_centers) == 15
    assert fit.params["mu"] == pytest.approx(10.0, rel=0.03)
    assert fit.fit_error >= 0


def test_fit_density_eq4_samples():
    gamma, mu, sigma = 8.0, 10.0, 0.5
    samples = stats.invgamma(a=gamma + 1, scale=gamma * mu).rvs(
        size=50_000, random_state=np.random.default_rng(4)
    )
    series = price_series(samples, 0.01)
    fit = fit_density(series, "eq4", mu=float(np.mean(samples)), sigma=sigma)
    assert fit.params["alpha"] == pytest.approx(gamma * sigma ** 2 / 2, rel=0.2)

    with pytest.raises(EstimationError, match="positive prices"):
        fit_density(price_series(samples - 100.0, 0.01), "eq4")


def test_normality_summary():
    rng = np.random.default_rng(5)
    normal = normality_summary(rng.normal(0.0, 0.1, 50_000))
    skewed = normality_summary(rng.exponential(0.1, 50_000))
    assert abs(normal.skewness) < 0.05
    assert abs(normal.excess_kurtosis) < 0.1
    assert normal.ks_distance < skewed.ks_distance
    assert skewed.skewness > 1

    with pytest.raises(DegenerateSeriesError):
        normality_summary(np.zeros(10))


@pytest.mark.parametrize("model", [NoiseKind.ADDITIVE, NoiseKind.MULTIPLICATIVE])
def test_estimate_series(mn_path, model):
    report = estimate_series(mn_path, model, k_max=20)
    assert report.label == mn_path.label
    assert report.params.kind == model
    assert len(report.residuals) == len(mn_path.values) - 1
    assert len(report.decay.y) == 21
    assert report.density_fit.family == ("normal" if model == NoiseKind.ADDITIVE else "eq4")
    assert report.residual_fit.family == "normal"
    assert 0 <= report.normality.ks_distance <= 1
    if model == NoiseKind.MULTIPLICATIVE:
        assert 1 <= report.k_fit <= 20


def test_estimate_series_reports_the_fitted_window(mn_path):
    """A fit window past k_max still gets a decay curve that covers it"""
    fit = estimate_mn(mn_path, k_fit=30, k_max=20)
    assert fit.k_fit == 30
    assert len(fit.decay.y) == 31

    report = estimate_series(mn_path, NoiseKind.MULTIPLICATIVE, k_max=20, k_fit=30)
    assert report.k_fit == 30
    assert len(report.decay.y) == 31
    assert np.array_equal(report.decay.y, fit.decay.y)
    assert report.params == fit.params

    with pytest.raises(EstimationError, match="fit window"):
        estimate_mn(price_series(np.linspace(1.0, 2.0, 10), 0.1), k_fit=10)


def test_decay_normalizations():
    """Autocovariance divides by n at every lag; the additive fit's variance by n - 1"""
    values = np.array([1.0, 3.0, 2.0, 6.0, 4.0])
    series = price_series(values, 0.1)
    mu = float(values.mean())
    decay = decay_diagnostics(series, mu, k_max=2, guard=0.0)

    centered = values - mu
    assert decay.autocov[0] == pytest.approx(np.var(values, ddof=0))
    assert decay.autocov[2] == pytest.approx(np.sum(centered[2:] * centered[:3]) / 5)

    sigma2 = np.sum(np.diff(values) ** 2) / (4 * 0.1)
    alpha = estimate_ou(series).params.alpha
    assert alpha == pytest.approx(sigma2 / (2 * np.var(values, ddof=1)))
