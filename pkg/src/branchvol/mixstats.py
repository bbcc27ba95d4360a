"""Density, tail probabilities, moments, and log-log diagnostics for
branch mixtures.

Tail quantities are evaluated in log space whenever they can leave the
range of ordinary doubles; the binomial-collapse forms make constant-rate
schedules tractable for depths far beyond the enumeration ceiling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .branching import GaussianBase, MixtureDistribution
from .special import (
    MAX_MOMENT_ORDER,
    UnsupportedOrderError,
    erfc,
    gaussian_abs_first_moment,
    gaussian_raw_moment,
    log_erfc,
)

_LN2 = math.log(2.0)
_LN_HALF = -_LN2
_SQRT2 = math.sqrt(2.0)
_SQRT_TWO_PI = math.sqrt(2.0 * math.pi)

_DENSITY_CHUNK = 4096

# Exact big-int binomials below this depth (they enter 1e-12 equivalence
# checks); lgamma beyond it, where exact coefficients would cost O(n^2).
_EXACT_BINOM_LIMIT = 300


def _log_binom(n: int, j: int) -> float:
    if n <= _EXACT_BINOM_LIMIT:
        return math.log(math.comb(n, j))
    return math.lgamma(n + 1) - math.lgamma(j + 1) - math.lgamma(n - j + 1)


def density(mixture: MixtureDistribution, x) -> float | np.ndarray:
    """Mixture density at x (scalar or array): 2^-N sum_i phi(mu, sigma_i, x)."""
    x_arr = np.asarray(x, dtype=np.float64)
    out = np.zeros(x_arr.shape)
    sigmas = mixture.component_sigmas
    n_chunks = max(1, math.ceil(sigmas.size / _DENSITY_CHUNK))
    for chunk in np.array_split(sigmas, n_chunks):
        z = (x_arr[..., None] - mixture.mu) / chunk
        out += np.sum(np.exp(-0.5 * z * z) / (chunk * _SQRT_TWO_PI), axis=-1)
    out *= mixture.weight
    if x_arr.ndim == 0:
        return float(out)
    return out


def density_constant_a(base: GaussianBase, a: float, n: int, x) -> float | np.ndarray:
    """Depth-n constant-rate mixture density via the O(n) binomial collapse.

    Equivalent to density(build_mixture(...)) but needs only n + 1 terms, so
    it works for depths where 2^n branches cannot be materialized. Intended
    for n up to a few thousand; components whose scale leaves the double
    range are skipped (their contribution is negligible at such depths).
    """
    _check_rate(a)
    _check_depth(n)
    x_arr = np.asarray(x, dtype=np.float64)
    out = np.zeros(x_arr.shape)
    lp, lm = math.log1p(a), math.log1p(-a)
    for j in range(n + 1):
        log_w = _log_binom(n, j) - n * _LN2
        log_s = math.log(base.sigma) + j * lp + (n - j) * lm
        if abs(log_s) > 700.0:
            continue
        s = math.exp(log_s)
        z = (x_arr - base.mu) / s
        out += math.exp(log_w) * np.exp(-0.5 * z * z) / (s * _SQRT_TWO_PI)
    if x_arr.ndim == 0:
        return float(out)
    return out


def exceedance(mixture: MixtureDistribution, k: float) -> float:
    """P(X > k) as the weighted sum of per-component Gaussian tails.

    Exact summation over all 2^N components; may underflow to 0.0 in very
    deep tails, where log_exceedance stays usable.
    """
    if not math.isfinite(k):
        raise ValueError(f"threshold must be finite, got {k!r}")
    total = math.fsum(
        0.5 * erfc((k - mixture.mu) / (_SQRT2 * s)) for s in mixture.component_sigmas
    )
    return min(1.0, mixture.weight * total)


def _log_component_tail(delta: float, log_sigma: float) -> float:
    # ln P(Normal(0, sigma^2) > delta) with sigma passed as log(sigma); safe
    # for scale factors far outside the double range.
    if delta == 0.0:
        return _LN_HALF
    log_abs_z = math.log(abs(delta)) - 0.5 * _LN2 - log_sigma
    if log_abs_z > 300.0:
        return -math.inf if delta > 0.0 else 0.0
    z = math.copysign(math.exp(log_abs_z), delta)
    return _LN_HALF + log_erfc(z)


def _logsumexp(terms) -> float:
    terms = list(terms)
    m = max(terms)
    if m == -math.inf:
        return -math.inf
    return m + math.log(math.fsum(math.exp(t - m) for t in terms))


def log_exceedance(mixture: MixtureDistribution, k: float) -> float:
    """ln P(X > k), computed per component in log space."""
    if not math.isfinite(k):
        raise ValueError(f"threshold must be finite, got {k!r}")
    delta = k - mixture.mu
    terms = (
        _log_component_tail(delta, math.log(s)) for s in mixture.component_sigmas
    )
    return -math.log(mixture.n_components) + _logsumexp(terms)


def _check_rate(a: float) -> None:
    if not (math.isfinite(a) and 0.0 <= a < 1.0):
        raise ValueError(f"rate must lie in [0, 1), got {a!r}")


def _check_depth(n: int) -> None:
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValueError(f"depth must be a nonnegative integer, got {n!r}")


def log_exceedance_constant_a(
    base: GaussianBase, a: float, n: int, k: float
) -> float:
    """ln P(X > k) at depth n for a constant rate, via the binomial collapse.

    The 2^n branches group into n + 1 scale classes sigma (1+a)^j (1-a)^(n-j)
    with binomial weights, so the cost is O(n); usable for n of 10^4 and up.
    """
    _check_rate(a)
    _check_depth(n)
    if not math.isfinite(k):
        raise ValueError(f"threshold must be finite, got {k!r}")
    delta = k - base.mu
    log_sigma = math.log(base.sigma)
    lp, lm = math.log1p(a), math.log1p(-a)
    terms = (
        _log_binom(n, j)
        - n * _LN2
        + _log_component_tail(delta, log_sigma + j * lp + (n - j) * lm)
        for j in range(n + 1)
    )
    return _logsumexp(terms)


def exceedance_constant_a(base: GaussianBase, a: float, n: int, k: float) -> float:
    """P(X > k) at depth n for a constant rate (binomial collapse)."""
    return min(1.0, math.exp(log_exceedance_constant_a(base, a, n, k)))


def convexity_ratio(base: GaussianBase, a: float, n: int, k: float) -> float:
    """Tail inflation P(X > k | depth n) / P(X > k | depth 0).

    Evaluated as a difference of log tail probabilities, so ratios of order
    10^18 on probabilities of order 10^-24 keep full relative accuracy.
    """
    return math.exp(
        log_exceedance_constant_a(base, a, n, k)
        - log_exceedance_constant_a(base, a, 0, k)
    )


def mixture_raw_moment(mixture: MixtureDistribution, order: int) -> float:
    """Raw moment E[X^order] by exact summation over the components.

    Only even powers of the component scales contribute:
    E[X^k] = sum_{m even} C(k, m) E[Z^m] mu^(k-m) sigma^m * mean(scale^m).
    """
    if not isinstance(order, int) or isinstance(order, bool):
        raise UnsupportedOrderError(f"moment order must be an integer, got {order!r}")
    if order < 0 or order > MAX_MOMENT_ORDER:
        raise UnsupportedOrderError(
            f"moment order {order} outside supported range 0..{MAX_MOMENT_ORDER}"
        )
    scales = mixture.scales
    total = 0.0
    for m in range(0, order + 1, 2):
        mean_pow = float(np.mean(scales**m)) if m else 1.0
        total += (
            math.comb(order, m)
            * gaussian_raw_moment(m, 0.0, 1.0)
            * mixture.mu ** (order - m)
            * mixture.sigma**m
            * mean_pow
        )
    return total


def mixture_abs_first_moment(mixture: MixtureDistribution) -> float:
    """E|X| for a centered mixture: sqrt(2/pi) sigma * mean(scales).

    The mean scale is 1 for every balanced schedule, so this is invariant
    in both the rates and the depth.
    """
    if mixture.mu != 0.0:
        raise ValueError(
            "absolute first moment is only supported for centered mixtures (mu = 0)"
        )
    return gaussian_abs_first_moment(mixture.sigma) * float(np.mean(mixture.scales))


@dataclass(frozen=True)
class LogLogSeries:
    """Geometric x grid with ln x and ln P(X > x)."""

    x: np.ndarray
    log_x: np.ndarray
    log_p: np.ndarray

    def __len__(self) -> int:
        return int(self.x.size)


def _loglog_grid(mu: float, x_min: float, x_max: float, points: int) -> np.ndarray:
    if not isinstance(points, int) or isinstance(points, bool) or points < 2:
        raise ValueError(f"need at least 2 points, got {points!r}")
    if not (x_min > 0.0 and x_min > mu):
        raise ValueError(f"x_min must exceed both 0 and mu, got {x_min!r}")
    if not x_max > x_min:
        raise ValueError(f"x_max must exceed x_min, got {x_max!r}")
    return np.linspace(math.log(x_min), math.log(x_max), points)


def loglog_series(
    mixture: MixtureDistribution, x_min: float, x_max: float, points: int
) -> LogLogSeries:
    """Survival function on a geometric grid, in log-log coordinates."""
    log_x = _loglog_grid(mixture.mu, x_min, x_max, points)
    x = np.exp(log_x)
    log_p = np.array([log_exceedance(mixture, v) for v in x])
    return LogLogSeries(x=x, log_x=log_x, log_p=log_p)


def loglog_series_constant_a(
    base: GaussianBase, a: float, n: int, x_min: float, x_max: float, points: int
) -> LogLogSeries:
    """Log-log survival series for a constant rate at any depth."""
    log_x = _loglog_grid(base.mu, x_min, x_max, points)
    x = np.exp(log_x)
    log_p = np.array([log_exceedance_constant_a(base, a, n, v) for v in x])
    return LogLogSeries(x=x, log_x=log_x, log_p=log_p)


def tail_slope_estimate(series: LogLogSeries, start: int, stop: int) -> float:
    """Least-squares slope of ln P against ln x over [start, stop)."""
    lx = series.log_x[start:stop]
    lp = series.log_p[start:stop]
    if lx.size < 3:
        raise ValueError(f"slope window needs at least 3 points, got {lx.size}")
    if not np.all(np.isfinite(lp)):
        raise ValueError("slope window contains non-finite ln P values")
    dx = lx - lx.mean()
    return float(np.dot(dx, lp - lp.mean()) / np.dot(dx, dx))


def local_slopes(series: LogLogSeries, half_window: int = 2) -> np.ndarray:
    """Per-point least-squares slope over a centered window (clipped at the ends)."""
    n = len(series)
    out = np.empty(n)
    for i in range(n):
        lo = max(0, i - half_window)
        hi = min(n, i + half_window + 1)
        out[i] = tail_slope_estimate(series, lo, hi)
    return out
