# -*- coding: utf-8 -*-

"""
Mean-reverting price models: the Ornstein-Uhlenbeck process with additive
noise and its multiplicative-noise counterpart,

    dS = α(μ − S)dt + σ dW          (additive)
    dS = α(μ − S)dt + σ S dW        (multiplicative)

with their stationary densities, Fokker-Planck checks and Euler-Maruyama
path generators.
"""

import math
import logging
import warnings
from enum import Enum
from typing import Callable, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, signal, stats
from scipy.special import gammaln

from .series import PriceSeries, price_series

logger = logging.getLogger("bandwidth_market.sde")

# A single Euler-Maruyama step may be redrawn at most this many times
MAX_REDRAWS_PER_STEP = 1000


class SdeError(ValueError):
    pass


class NonNormalizableError(SdeError):
    pass


class CorrelationMatrixError(SdeError):
    pass


class NoiseKind(Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


class SdeParams(NamedTuple):
    kind: NoiseKind
    alpha: float
    mu: float
    sigma: float

    @property
    def gamma(self) -> float:
        """γ ≡ 2α/σ², the shape of the multiplicative stationary density."""
        return 2 * self.alpha / self.sigma ** 2

    @property
    def stationary_sd(self) -> float:
        """σ/√(2α), the stationary standard deviation of the additive process."""
        return self.sigma / math.sqrt(2 * self.alpha)

    def validate(self, need_noise: bool = False) -> "SdeParams":
        if not isinstance(self.kind, NoiseKind):
            raise SdeError(f"unknown noise kind {self.kind!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise SdeError(f"mean reversion rate must be positive, got {self.alpha}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise SdeError(f"volatility must be non-negative, got {self.sigma}")
        if need_noise and self.sigma == 0:
            raise SdeError("the stationary density needs a positive volatility")
        if not math.isfinite(self.mu):
            raise SdeError(f"long-run mean must be finite, got {self.mu}")
        if self.kind == NoiseKind.MULTIPLICATIVE and self.mu <= 0:
            raise SdeError(
                f"multiplicative noise needs a positive long-run mean, got {self.mu}"
            )
        return self


def ou(alpha: float, mu: float, sigma: float) -> SdeParams:
    return SdeParams(NoiseKind.ADDITIVE, alpha, mu, sigma).validate()


def mn(alpha: float, mu: float, sigma: float) -> SdeParams:
    return SdeParams(NoiseKind.MULTIPLICATIVE, alpha, mu, sigma).validate()


def _check_kind(p: SdeParams, kind: NoiseKind):
    if p.kind != kind:
        raise SdeError(f"expected {kind.value} noise parameters, got {p.kind.value}")
    p.validate(need_noise=True)


def _unwrap(s, result: np.ndarray):
    return float(result) if np.ndim(s) == 0 else result


def ou_stationary_pdf(s, p: SdeParams):
    """
    N[μ, σ/√(2α)] density, C₀·exp(−½((s − μ)/(σ/√(2α)))²) with C₀ = (πσ²/α)^{-1/2}.
    """
    _check_kind(p, NoiseKind.ADDITIVE)
    s = np.asarray(s, dtype=float)
    c0 = (math.pi * p.sigma ** 2 / p.alpha) ** -0.5
    return _unwrap(s, c0 * np.exp(-0.5 * ((s - p.mu) / p.stationary_sd) ** 2))


def _mn_log_norm(p: SdeParams) -> float:
    # log of (γμ)^γ·μ/Γ(γ); Γ via log-gamma so large γ cannot overflow
    g = p.gamma
    return g * math.log(g * p.mu) + math.log(p.mu) - gammaln(g)


def mn_stationary_pdf(s, p: SdeParams):
    """
    ((γμ)^γ μ/Γ(γ))·exp(−γμ/s)·s^{−(γ+2)} for s > 0, zero elsewhere.
    This is the inverse-gamma law with shape γ+1 and scale γμ.
    """
    _check_kind(p, NoiseKind.MULTIPLICATIVE)
    s = np.asarray(s, dtype=float)
    g = p.gamma
    out = np.zeros_like(s)
    pos = s > 0
    sp = s[pos]
    out[pos] = np.exp(_mn_log_norm(p) - g * p.mu / sp - (g + 2) * np.log(sp))
    return _unwrap(s, out)


def mn_log_stationary_pdf(x, p: SdeParams):
    """
    Stationary density of X = log S under multiplicative noise,
    C·exp(−γμe^{−x} − (γ+1)x), with the same C as `mn_stationary_pdf`.
    """
    _check_kind(p, NoiseKind.MULTIPLICATIVE)
    x = np.asarray(x, dtype=float)
    g = p.gamma
    return _unwrap(x, np.exp(_mn_log_norm(p) - g * p.mu * np.exp(-x) - (g + 1) * x))


def stationary_pdf(s, p: SdeParams):
    if p.kind == NoiseKind.ADDITIVE:
        return ou_stationary_pdf(s, p)
    return mn_stationary_pdf(s, p)


def stationary_pdf_derivative(s, p: SdeParams):
    """∂P/∂s of the closed-form stationary density."""
    s = np.asarray(s, dtype=float)
    density = np.asarray(stationary_pdf(s, p))
    if p.kind == NoiseKind.ADDITIVE:
        return _unwrap(s, -(s - p.mu) / p.stationary_sd ** 2 * density)

    g = p.gamma
    out = np.zeros_like(s)
    pos = s > 0
    sp = s[pos]
    out[pos] = density[pos] * (g * p.mu / sp ** 2 - (g + 2) / sp)
    return _unwrap(s, out)


def drift(p: SdeParams) -> Callable[[float], float]:
    return lambda s: p.alpha * (p.mu - s)


def diffusion(p: SdeParams) -> Callable[[float], float]:
    if p.kind == NoiseKind.ADDITIVE:
        return lambda s: p.sigma * np.ones_like(s) if np.ndim(s) else p.sigma
    return lambda s: p.sigma * s


def fokker_planck_residual(p: SdeParams, s, numeric: bool = False):
    """
    Residual of the stationary Fokker-Planck ODE

        ∂P/∂s − ((2a − 2b·∂b/∂s)/b²)·P = 0

    for the closed-form density of `p`. Derivatives are analytic, or central
    differences when `numeric` is set.
    """
    s = np.asarray(s, dtype=float)
    a = p.alpha * (p.mu - s)
    if p.kind == NoiseKind.ADDITIVE:
        b = np.full_like(s, p.sigma)
        db = np.zeros_like(s)
    else:
        b = p.sigma * s
        db = np.full_like(s, p.sigma)

    density = np.asarray(stationary_pdf(s, p))
    if numeric:
        h = 1e-5 * np.maximum(1.0, np.abs(s))
        d_density = (
            np.asarray(stationary_pdf(s + h, p)) - np.asarray(stationary_pdf(s - h, p))
        ) / (2 * h)
    else:
        d_density = np.asarray(stationary_pdf_derivative(s, p))

    return _unwrap(s, d_density - (2 * a - 2 * b * db) / b ** 2 * density)


def stationary_support(p: SdeParams, tail_mass: float = 1e-12) -> Tuple[float, float]:
    """Interval outside which the stationary density holds `tail_mass` per side."""
    p.validate(need_noise=True)
    if p.kind == NoiseKind.ADDITIVE:
        z = stats.norm.isf(tail_mass)
        return p.mu - z * p.stationary_sd, p.mu + z * p.stationary_sd

    law = stats.invgamma(a=p.gamma + 1, scale=p.gamma * p.mu)
    return float(law.ppf(tail_mass)), float(law.isf(tail_mass))


def stationary_mode(p: SdeParams) -> float:
    if p.kind == NoiseKind.ADDITIVE:
        return p.mu
    g = p.gamma
    return g * p.mu / (g + 2)


def stationary_moment(p: SdeParams, order: int = 1, tail_mass: float = 1e-12) -> float:
    """∫ s^order·P(s) ds over the stationary support, by adaptive quadrature."""
    lo, hi = stationary_support(p, tail_mass)
    value, _ = integrate.quad(
        lambda s: s ** order * stationary_pdf(s, p),
        lo,
        hi,
        points=[stationary_mode(p)],
        epsabs=1e-13,
        epsrel=1e-12,
        limit=200,
    )
    return value


class DensityCurve(NamedTuple):
    grid: np.ndarray
    density: np.ndarray
    normalization: float


def stationary_pdf_numeric(
    drift: Callable[[float], float],
    diffusion: Callable[[float], float],
    s_range: Tuple[float, float],
    grid: Optional[Sequence[float]] = None,
    s_ref: Optional[float] = None,
    n_grid: int = 200,
    tail_tol: float = 1e-6,
) -> DensityCurve:
    """
    Stationary density of dS = a(S)dt + b(S)dW over `s_range`,

        P(s) = C·exp(∫_{s_ref}^{s} 2a(u)/b(u)² du) / b(s)²

    evaluated on `grid` (default: `n_grid` points spanning the range), with C
    fixed by ∫P = 1 over `s_range`.

    Raises:
        SdeError if b is not positive on the range
        NonNormalizableError if the normalizing integral diverges or the
        density has not decayed at the ends of the range
    """
    lo, hi = map(float, s_range)
    if not lo < hi:
        raise SdeError(f"empty range ({lo}, {hi})")
    if grid is None:
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise SdeError("an explicit grid is needed for an unbounded range")
        grid = np.linspace(lo, hi, n_grid)
    grid = np.asarray(grid, dtype=float)
    if s_ref is None:
        s_ref = float(np.median(grid))

    finite_ends = [v for v in (lo, hi) if math.isfinite(v)]
    for s in np.concatenate([grid, finite_ends]):
        if not diffusion(s) > 0:
            raise SdeError(f"diffusion must be positive on the range, b({s}) = {diffusion(s)}")

    def potential(s: float) -> float:
        value, _ = integrate.quad(
            lambda u: 2 * drift(u) / diffusion(u) ** 2,
            s_ref,
            s,
            epsabs=1e-12,
            epsrel=1e-10,
            limit=200,
        )
        return value

    def log_unnormalized(s: float) -> float:
        return potential(s) - 2 * math.log(diffusion(s))

    log_on_grid = np.array([log_unnormalized(s) for s in grid])
    shift = float(np.max(log_on_grid))

    # the density must have died out where the range ends
    for end in finite_ends:
        if log_unnormalized(end) - shift > math.log(tail_tol):
            raise NonNormalizableError(
                f"density does not decay towards {end}; "
                f"no stationary distribution on ({lo}, {hi})"
            )

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            normalization, _ = integrate.quad(
                lambda s: math.exp(log_unnormalized(s) - shift),
                lo,
                hi,
                epsabs=1e-12,
                epsrel=1e-9,
                limit=200,
            )
        except (integrate.IntegrationWarning, OverflowError) as e:
            raise NonNormalizableError(f"normalizing integral diverges: {e}") from e

    if not (math.isfinite(normalization) and normalization > 0):
        raise NonNormalizableError(f"normalizing integral is {normalization}")

    density = np.exp(log_on_grid - shift) / normalization
    return DensityCurve(grid, density, normalization * math.exp(shift))


def conditional_mean(p: SdeParams, s0, tau):
    """E[S(t + τ) | S(t) = s0] = e^{−ατ}(s0 − μ) + μ."""
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise SdeError(f"horizon must be non-negative, got {tau}")
    result = np.exp(-p.alpha * tau) * (np.asarray(s0, dtype=float) - p.mu) + p.mu
    return float(result) if np.ndim(result) == 0 else result


def simulate_path(
    p: SdeParams,
    L: int,
    dt: float,
    s0: Optional[float] = None,
    seed: Optional[int] = None,
    label: str = "simulated",
) -> PriceSeries:
    """
    Euler-Maruyama path S(0..L−1) started at `s0` (default μ):

        S(k+1) = S(k) + α(μ − S(k))Δt + σ·[S(k) if multiplicative]·√Δt·ξ_k

    Under multiplicative noise a step that would reach S ≤ 0 is redrawn with a
    fresh normal variate; the number of redraws is logged.
    """
    p.validate()
    if L < 2:
        raise SdeError(f"need at least 2 steps, got {L}")
    s = float(p.mu if s0 is None else s0)
    rng = np.random.default_rng(seed)

    alpha, mu, sigma = p.alpha, p.mu, p.sigma
    sqrt_dt = math.sqrt(dt)
    multiplicative = p.kind == NoiseKind.MULTIPLICATIVE
    if multiplicative and s <= 0:
        raise SdeError(f"multiplicative paths must start above 0, got {s}")

    if not multiplicative:
        # x(k+1) = (1 − αΔt)·x(k) + σ√Δt·ξ_k for x = S − μ, an AR(1) filter
        phi = 1 - alpha * dt
        drive = sigma * sqrt_dt * rng.standard_normal(L - 1)
        x, _ = signal.lfilter([1.0], [1.0, -phi], drive, zi=[phi * (s - mu)])
        return price_series(np.concatenate([[s], mu + x]), dt, label)

    noise = rng.standard_normal(L - 1).tolist()
    values = [s]
    redraws = 0
    for xi in noise:
        step = s + alpha * (mu - s) * dt + sigma * s * sqrt_dt * xi
        attempts = 0
        while step <= 0:
            attempts += 1
            if attempts > MAX_REDRAWS_PER_STEP:
                raise SdeError(f"could not keep the path positive at S={s}; reduce dt")
            xi = rng.standard_normal()
            step = s + alpha * (mu - s) * dt + sigma * s * sqrt_dt * xi
        redraws += attempts
        s = step
        values.append(s)

    if redraws:
        logger.warning(f"{label}: redrew {redraws} of {L - 1} steps to stay positive")
    return price_series(values, dt, label)


def _step_ensemble(p: SdeParams, s: np.ndarray, dt: float, z: np.ndarray) -> np.ndarray:
    scale = s if p.kind == NoiseKind.MULTIPLICATIVE else 1.0
    return s + p.alpha * (p.mu - s) * dt + p.sigma * scale * math.sqrt(dt) * z


def simulate_paths(
    p: SdeParams,
    n_paths: int,
    L: int,
    dt: float,
    s0: Optional[float] = None,
    seed: Optional[int] = None,
) -> np.ndarray:
    """An (n_paths, L) ensemble of independent Euler-Maruyama paths from a common start."""
    p.validate()
    rng = np.random.default_rng(seed)
    paths = np.empty((n_paths, L))
    paths[:, 0] = p.mu if s0 is None else s0

    for k in range(L - 1):
        z = rng.standard_normal(n_paths)
        nxt = _step_ensemble(p, paths[:, k], dt, z)
        bad = nxt <= 0
        attempts = 0
        while p.kind == NoiseKind.MULTIPLICATIVE and np.any(bad):
            attempts += 1
            if attempts > MAX_REDRAWS_PER_STEP:
                raise SdeError("could not keep the paths positive; reduce dt")
            z[bad] = rng.standard_normal(int(bad.sum()))
            nxt[bad] = _step_ensemble(p, paths[bad, k], dt, z[bad])
            bad = nxt <= 0
        paths[:, k + 1] = nxt

    return paths


def check_correlation_matrix(rho) -> np.ndarray:
    """
    Validate a correlation matrix: square, symmetric, unit diagonal, entries
    in [−1, 1] and positive semi-definite.

    Raises:
        CorrelationMatrixError naming the violated property
    """
    rho = np.asarray(rho, dtype=float)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise CorrelationMatrixError(f"correlation matrix must be square, got {rho.shape}")
    if not np.allclose(rho, rho.T, atol=1e-12):
        raise CorrelationMatrixError("correlation matrix must be symmetric")
    if not np.allclose(np.diag(rho), 1.0, atol=1e-12):
        raise CorrelationMatrixError("correlation matrix must have a unit diagonal")
    if np.any(np.abs(rho) > 1 + 1e-12):
        raise CorrelationMatrixError("correlations must lie in [-1, 1]")
    min_eig = float(np.linalg.eigvalsh(rho).min())
    if min_eig < -1e-10:
        raise CorrelationMatrixError(
            f"correlation matrix is not positive semi-definite (eigenvalue {min_eig:.3g})"
        )
    return rho


def noise_factor(rho) -> np.ndarray:
    """A matrix F with F·Fᵀ = ρ: Cholesky, or an eigen factor when ρ is singular."""
    rho = check_correlation_matrix(rho)
    try:
        return np.linalg.cholesky(rho)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(rho)
        return v * np.sqrt(np.clip(w, 0.0, None))


def simulate_correlated_paths(
    params: Sequence[SdeParams],
    rho,
    L: int,
    dt: float,
    seed: Optional[int] = None,
    s0: Optional[Sequence[float]] = None,
):
    """
    Jointly simulate one path per entry of `params`, driven by Wiener increments
    with correlation matrix `rho`. Returns a list of `PriceSeries` labelled 0..n−1.
    """
    n = len(params)
    factor = noise_factor(rho)
    if factor.shape[0] != n:
        raise CorrelationMatrixError(
            f"correlation matrix is {factor.shape[0]}x{factor.shape[0]} for {n} processes"
        )
    for p in params:
        p.validate()

    alpha = np.array([p.alpha for p in params])
    mu = np.array([p.mu for p in params])
    sigma = np.array([p.sigma for p in params])
    multiplicative = np.array([p.kind == NoiseKind.MULTIPLICATIVE for p in params])
    sqrt_dt = math.sqrt(dt)

    rng = np.random.default_rng(seed)
    paths = np.empty((L, n))
    paths[0] = mu if s0 is None else np.asarray(s0, dtype=float)
    noise = rng.standard_normal((L - 1, n)) @ factor.T

    redraws = 0
    for k in range(L - 1):
        s = paths[k]
        scale = np.where(multiplicative, s, 1.0)
        z = noise[k]
        nxt = s + alpha * (mu - s) * dt + sigma * scale * sqrt_dt * z
        attempts = 0
        while np.any(multiplicative & (nxt <= 0)):
            attempts += 1
            if attempts > MAX_REDRAWS_PER_STEP:
                raise SdeError("could not keep the paths positive; reduce dt")
            z = factor @ rng.standard_normal(n)
            nxt = s + alpha * (mu - s) * dt + sigma * scale * sqrt_dt * z
        redraws += attempts
        paths[k + 1] = nxt

    if redraws:
        logger.warning(f"redrew {redraws} of {L - 1} joint steps to stay positive")
    return [price_series(paths[:, i], dt, str(i)) for i in range(n)]
