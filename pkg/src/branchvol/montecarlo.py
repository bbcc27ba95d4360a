"""Seeded Monte Carlo validation of branch mixtures.

Sampling picks a branch index uniformly (equivalent to N independent fair
sign flips) and then draws from the branch's Gaussian. Summaries hold
sufficient statistics only, so partial runs merge associatively; the
generator is numpy's PCG64, which produces identical streams for a given
seed on every platform.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .branching import MixtureDistribution
from .special import MAX_MOMENT_ORDER, UnsupportedOrderError

_MAX_POWER = 2 * MAX_MOMENT_ORDER  # x^2k needed for the SE of moment k
_BRANCH_COUNT_LIMIT = 2**16
_BLOCK = 1 << 20


@dataclass(frozen=True)
class SampleSpec:
    """Sample size, seed, and the targets to estimate."""

    n_samples: int
    seed: int
    moment_orders: tuple[int, ...] = (1, 2, 3, 4)
    thresholds: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not isinstance(self.n_samples, int) or self.n_samples < 1:
            raise ValueError(f"n_samples must be a positive integer, got {self.n_samples!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        object.__setattr__(self, "moment_orders", tuple(int(k) for k in self.moment_orders))
        object.__setattr__(self, "thresholds", tuple(float(k) for k in self.thresholds))
        for k in self.moment_orders:
            if k < 1 or k > MAX_MOMENT_ORDER:
                raise UnsupportedOrderError(
                    f"moment order {k} outside supported range 1..{MAX_MOMENT_ORDER}"
                )


@dataclass
class MCSummary:
    """Sufficient statistics of a sampling run (mergeable)."""

    n: int
    seeds: tuple[int, ...]
    moment_orders: tuple[int, ...]
    thresholds: tuple[float, ...]
    power_sums: np.ndarray  # power_sums[k] = sum of x^k, k = 0.._MAX_POWER
    exceed_counts: dict[float, int]
    branch_counts: np.ndarray | None = field(default=None)

    def merge(self, other: "MCSummary") -> "MCSummary":
        """Combine two runs; addition of sufficient statistics, so the merge
        is associative and order-insensitive up to float rounding."""
        if self.moment_orders != other.moment_orders or self.thresholds != other.thresholds:
            raise ValueError("cannot merge summaries with different targets")
        counts = None
        if self.branch_counts is not None and other.branch_counts is not None:
            if self.branch_counts.shape != other.branch_counts.shape:
                raise ValueError("cannot merge summaries over different mixtures")
            counts = self.branch_counts + other.branch_counts
        return MCSummary(
            n=self.n + other.n,
            seeds=self.seeds + other.seeds,
            moment_orders=self.moment_orders,
            thresholds=self.thresholds,
            power_sums=self.power_sums + other.power_sums,
            exceed_counts={
                k: self.exceed_counts[k] + other.exceed_counts[k]
                for k in self.exceed_counts
            },
            branch_counts=counts,
        )


def sample(mixture: MixtureDistribution, spec: SampleSpec) -> MCSummary:
    """Draw spec.n_samples values; identical inputs give identical summaries.

    Draws are blocked to bound memory; the block size is fixed so the
    stream, and therefore every statistic, is reproducible bit for bit.
    """
    rng = np.random.default_rng(spec.seed)
    n_comp = mixture.n_components
    power_sums = np.zeros(_MAX_POWER + 1)
    exceed = {k: 0 for k in spec.thresholds}
    counts = (
        np.zeros(n_comp, dtype=np.int64) if n_comp <= _BRANCH_COUNT_LIMIT else None
    )
    remaining = spec.n_samples
    while remaining:
        m = min(_BLOCK, remaining)
        idx = rng.integers(0, n_comp, size=m)
        x = mixture.mu + mixture.sigma * mixture.scales[idx] * rng.standard_normal(m)
        if counts is not None:
            counts += np.bincount(idx, minlength=n_comp)
        xp = np.ones(m)
        power_sums[0] += m
        for k in range(1, _MAX_POWER + 1):
            xp = xp * x
            power_sums[k] += float(xp.sum())
        for k in exceed:
            exceed[k] += int(np.count_nonzero(x > k))
        remaining -= m
    return MCSummary(
        n=spec.n_samples,
        seeds=(spec.seed,),
        moment_orders=spec.moment_orders,
        thresholds=spec.thresholds,
        power_sums=power_sums,
        exceed_counts=exceed,
        branch_counts=counts,
    )


@dataclass(frozen=True)
class TargetEstimate:
    kind: str  # "moment" or "exceedance"
    key: float  # the order, or the threshold
    estimate: float
    se: float
    reliable: bool


@dataclass(frozen=True)
class MomentsReport:
    """Point estimates with standard errors for every requested target."""

    n: int
    seeds: tuple[int, ...]
    targets: tuple[TargetEstimate, ...]
    kurtosis: float
    kurtosis_se: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "seed": list(self.seeds),
            "kurtosis": self.kurtosis,
            "kurtosis_se": self.kurtosis_se,
            "targets": [
                {
                    "kind": t.kind,
                    "key": t.key,
                    "estimate": t.estimate,
                    "se": t.se,
                    "reliable": t.reliable,
                }
                for t in self.targets
            ],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def estimate(summary: MCSummary) -> MomentsReport:
    """Estimates and standard errors from a summary.

    Raw-moment estimates are sample means of x^k, so their SE is the sample
    standard deviation of x^k over sqrt(n); exceedance targets get binomial
    SEs and are flagged unreliable once the estimated probability drops
    below 10/n. Kurtosis m4/m2^2 carries a delta-method SE.
    """
    n = summary.n
    if n < 30:
        raise ValueError(f"need at least 30 samples to estimate, got {n}")
    mean_pow = summary.power_sums / n
    targets = []
    for k in summary.moment_orders:
        est = float(mean_pow[k])
        var = max(0.0, float(mean_pow[2 * k]) - est * est)
        targets.append(TargetEstimate("moment", float(k), est, math.sqrt(var / n), True))
    for k in summary.thresholds:
        p = summary.exceed_counts[k] / n
        se = math.sqrt(p * (1.0 - p) / n)
        targets.append(TargetEstimate("exceedance", k, p, se, p >= 10.0 / n))
    m2, m4 = float(mean_pow[2]), float(mean_pow[4])
    kurt = m4 / m2**2
    var_m2 = max(0.0, float(mean_pow[4]) - m2 * m2) / n
    var_m4 = max(0.0, float(mean_pow[8]) - m4 * m4) / n
    cov = (float(mean_pow[6]) - m2 * m4) / n
    g4 = 1.0 / m2**2
    g2 = -2.0 * m4 / m2**3
    var_kurt = max(0.0, g4 * g4 * var_m4 + g2 * g2 * var_m2 + 2.0 * g4 * g2 * cov)
    return MomentsReport(
        n=n,
        seeds=summary.seeds,
        targets=tuple(targets),
        kurtosis=kurt,
        kurtosis_se=math.sqrt(var_kurt),
    )


@dataclass(frozen=True)
class TargetCheck:
    """One estimate against its closed-form reference."""

    kind: str
    key: float
    estimate: float
    se: float
    reference: float
    z: float | None
    reliable: bool
    passed: bool | None  # None when the target was refused as unreliable


def check_report(
    report: MomentsReport, references: dict[tuple[str, float], float], n_se: float = 4.0
) -> list[TargetCheck]:
    """Compare every target against its reference at the given SE multiple.

    Unreliable targets are refused (passed = None) rather than reported as
    confirmations; zero-SE targets pass only on exact equality.
    """
    checks = []
    for t in report.targets:
        ref = references[(t.kind, t.key)]
        if not t.reliable:
            checks.append(TargetCheck(t.kind, t.key, t.estimate, t.se, ref, None, False, None))
            continue
        if t.se == 0.0:
            passed = t.estimate == ref
            z = 0.0 if passed else math.inf
        else:
            z = (t.estimate - ref) / t.se
            passed = abs(z) <= n_se
        checks.append(TargetCheck(t.kind, t.key, t.estimate, t.se, ref, z, True, passed))
    return checks
