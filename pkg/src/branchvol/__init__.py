"""Recursive uncertainty on a Gaussian scale parameter.

Layering two-state errors on a standard deviation N times produces an
equal-weight mixture of 2^N Gaussians. This package builds those mixtures,
evaluates their densities, tail probabilities and exact moments under
constant, geometrically decaying, and additive error-rate regimes, and
cross-checks everything with a seeded Monte Carlo oracle.
"""

from .branching import (
    EnumerationLimitError,
    ErrorSchedule,
    GaussianBase,
    MixtureDistribution,
    Mode,
    NonPositiveScaleError,
    ScaleSet,
    ScheduleParseError,
    ScheduleSpec,
    build_mixture,
    build_scale_set,
    build_sign_matrix,
    parse_schedule,
    parse_schedule_spec,
    variance_preserving_pair,
)
from .closedform import (
    BleedParams,
    kurtosis_constant_a,
    m2_bleed,
    m4_bleed,
    moment_constant_a,
    moment_multiplicative,
    moments_additive,
    variance_growth_factor,
)
from .mixstats import (
    LogLogSeries,
    convexity_ratio,
    density,
    density_constant_a,
    exceedance,
    exceedance_constant_a,
    local_slopes,
    log_exceedance,
    log_exceedance_constant_a,
    loglog_series,
    loglog_series_constant_a,
    mixture_abs_first_moment,
    mixture_raw_moment,
    tail_slope_estimate,
)
from .montecarlo import (
    MCSummary,
    MomentsReport,
    SampleSpec,
    TargetCheck,
    TargetEstimate,
    check_report,
    estimate,
    sample,
)
from .special import (
    INFINITY,
    DivergenceError,
    UnsupportedOrderError,
    erfc,
    gaussian_abs_first_moment,
    gaussian_raw_moment,
    log_erfc,
    q_pochhammer,
)

__version__ = "0.1.0"

__all__ = [
    "BleedParams",
    "DivergenceError",
    "EnumerationLimitError",
    "ErrorSchedule",
    "GaussianBase",
    "INFINITY",
    "LogLogSeries",
    "MCSummary",
    "MixtureDistribution",
    "Mode",
    "MomentsReport",
    "NonPositiveScaleError",
    "SampleSpec",
    "ScaleSet",
    "ScheduleParseError",
    "ScheduleSpec",
    "TargetCheck",
    "TargetEstimate",
    "UnsupportedOrderError",
    "build_mixture",
    "build_scale_set",
    "build_sign_matrix",
    "check_report",
    "convexity_ratio",
    "density",
    "density_constant_a",
    "erfc",
    "estimate",
    "exceedance",
    "exceedance_constant_a",
    "gaussian_abs_first_moment",
    "gaussian_raw_moment",
    "kurtosis_constant_a",
    "local_slopes",
    "log_erfc",
    "log_exceedance",
    "log_exceedance_constant_a",
    "loglog_series",
    "loglog_series_constant_a",
    "m2_bleed",
    "m4_bleed",
    "mixture_abs_first_moment",
    "mixture_raw_moment",
    "moment_constant_a",
    "moment_multiplicative",
    "moments_additive",
    "parse_schedule",
    "parse_schedule_spec",
    "q_pochhammer",
    "sample",
    "variance_growth_factor",
    "variance_preserving_pair",
]
