"""Branch construction for recursively perturbed scale parameters.

A depth-N schedule of error rates a(1)..a(N) generates all 2^N sign tuples.
Each tuple maps the base scale sigma to sigma * scale_i, either by the
product prod_j (1 + s_j a(j)) or, in additive mode, by 1 + sum_j s_j a^j.
The result is an equal-weight Gaussian mixture over the branches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

MAX_ENUMERATION_DEPTH = 24
"""Largest depth for which the 2^N branches are materialized explicitly."""


class Mode(Enum):
    MULTIPLICATIVE = "multiplicative"
    ADDITIVE = "additive"


class EnumerationLimitError(ValueError):
    """Depth too large to enumerate 2^N branches explicitly."""


class NonPositiveScaleError(ValueError):
    """A branch produced a scale multiplier <= 0."""


class ScheduleParseError(ValueError):
    """Schedule grammar string could not be parsed."""


@dataclass(frozen=True)
class ErrorSchedule:
    """Ordered error rates a(1)..a(N) plus the way they combine.

    Every rate must lie in [0, 1). ADDITIVE schedules must be the power
    sequence a, a^2, ..., a^N of a single generating rate, because the
    branch offsets are the signed sums of those powers.
    """

    rates: tuple[float, ...]
    mode: Mode = Mode.MULTIPLICATIVE

    def __post_init__(self) -> None:
        rates = tuple(float(r) for r in self.rates)
        object.__setattr__(self, "rates", rates)
        for j, r in enumerate(rates, start=1):
            if not math.isfinite(r) or not (0.0 <= r < 1.0):
                raise ValueError(f"rate a({j})={r!r} outside [0, 1)")
        if self.mode is Mode.ADDITIVE and rates:
            a = rates[0]
            for j, r in enumerate(rates, start=1):
                if not math.isclose(r, a**j, rel_tol=1e-9, abs_tol=1e-15):
                    raise ValueError(
                        "additive schedules require rates a, a^2, ..., a^N; "
                        f"position {j} has {r!r}, expected {a**j!r}"
                    )

    @property
    def depth(self) -> int:
        return len(self.rates)

    @classmethod
    def constant(cls, a: float, n: int) -> "ErrorSchedule":
        """Flat rate a at every level."""
        return cls((float(a),) * n)

    @classmethod
    def bleed(cls, a1: float, lam: float, n: int) -> "ErrorSchedule":
        """Geometrically decaying rates a(k) = lam^(k-1) * a1."""
        if not (lam >= 0.0 and math.isfinite(lam)):
            raise ValueError(f"lam must be finite and >= 0, got {lam!r}")
        return cls(tuple(float(a1) * lam**k for k in range(n)))

    @classmethod
    def geometric(cls, a: float, n: int) -> "ErrorSchedule":
        """Additive-mode schedule with rates a, a^2, ..., a^n."""
        return cls(tuple(float(a) ** j for j in range(1, n + 1)), Mode.ADDITIVE)

    @classmethod
    def explicit(
        cls, rates, mode: Mode = Mode.MULTIPLICATIVE
    ) -> "ErrorSchedule":
        return cls(tuple(float(r) for r in rates), mode)


@dataclass(frozen=True)
class GaussianBase:
    """Location and scale of the unperturbed Gaussian."""

    mu: float = 0.0
    sigma: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu!r}")
        if not (math.isfinite(self.sigma) and self.sigma > 0.0):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")


@dataclass(frozen=True)
class ScaleSet:
    """Per-branch scale multipliers with their common weight 2^-N."""

    scales: np.ndarray
    weight: float


@dataclass(frozen=True)
class MixtureDistribution:
    """Equal-weight mixture of Normal(mu, (sigma * scale_i)^2) components."""

    mu: float
    sigma: float
    scales: np.ndarray
    weight: float

    @property
    def n_components(self) -> int:
        return int(self.scales.size)

    @property
    def component_sigmas(self) -> np.ndarray:
        return self.sigma * self.scales


def build_sign_matrix(n: int) -> np.ndarray:
    """All 2^n sign tuples as a (2^n, n) int8 array.

    Rows count in binary with +1 ordered before -1 and the last column
    flipping fastest: row 0 is all +1, row 2^n - 1 is all -1.
    """
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise ValueError(f"depth must be a nonnegative integer, got {n!r}")
    if n > MAX_ENUMERATION_DEPTH:
        raise EnumerationLimitError(
            f"depth {n} exceeds the enumeration ceiling {MAX_ENUMERATION_DEPTH}; "
            "for constant rates use the binomial forms "
            "(exceedance_constant_a, density_constant_a, moment_constant_a)"
        )
    idx = np.arange(2**n, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    signs = (1 - 2 * bits).astype(np.int8)
    signs.setflags(write=False)
    return signs


def build_scale_set(schedule: ErrorSchedule) -> ScaleSet:
    """Evaluate every branch's scale multiplier for the given schedule.

    MULTIPLICATIVE: scale_i = prod_j (1 + T[i,j] a(j)), always positive.
    ADDITIVE: scale_i = 1 + sum_j T[i,j] a^j; raises NonPositiveScaleError
    if any branch's offset sum reaches -1.
    """
    n = schedule.depth
    signs = build_sign_matrix(n)
    rates = np.asarray(schedule.rates, dtype=np.float64)
    if schedule.mode is Mode.MULTIPLICATIVE:
        scales = np.ones(2**n)
        for j in range(n):
            scales *= 1.0 + rates[j] * signs[:, j]
    else:
        scales = 1.0 + signs.astype(np.float64) @ rates
        bad = np.nonzero(scales <= 0.0)[0]
        if bad.size:
            i = int(bad[0])
            row = tuple(int(s) for s in signs[i])
            raise NonPositiveScaleError(
                f"branch {i} with signs {row} has scale {scales[i]:.6g} <= 0"
            )
    scales.setflags(write=False)
    return ScaleSet(scales=scales, weight=2.0**-n)


def build_mixture(base: GaussianBase, schedule: ErrorSchedule) -> MixtureDistribution:
    """Equal-weight Gaussian mixture over all branches of the schedule.

    Depth 0 yields the single base Gaussian.
    """
    scale_set = build_scale_set(schedule)
    return MixtureDistribution(
        mu=base.mu,
        sigma=base.sigma,
        scales=scale_set.scales,
        weight=scale_set.weight,
    )


def variance_preserving_pair(sigma: float, v: float) -> tuple[float, float]:
    """Two-point scale mixture (low, high) whose mean square is sigma^2.

    low = sigma (1 - v) and high = sigma sqrt(1 + 2v - v^2), so that
    (low^2 + high^2) / 2 = sigma^2 identically.
    """
    if not sigma > 0.0:
        raise ValueError(f"sigma must be positive, got {sigma!r}")
    if not (0.0 <= v < 1.0):
        raise ValueError(f"v must lie in [0, 1), got {v!r}")
    low = sigma * (1.0 - v)
    high = sigma * math.sqrt(1.0 + 2.0 * v - v * v)
    return low, high


@dataclass(frozen=True)
class ScheduleSpec:
    """Parsed schedule grammar kept in symbolic form so depth can be swapped."""

    kind: str
    n: int
    a: float | None = None
    a1: float | None = None
    lam: float | None = None
    rates: tuple[float, ...] | None = None
    additive: bool = False

    def to_schedule(self, n: int | None = None) -> ErrorSchedule:
        depth = self.n if n is None else n
        if self.kind == "constant":
            schedule = ErrorSchedule.constant(self.a, depth)
        elif self.kind == "bleed":
            schedule = ErrorSchedule.bleed(self.a1, self.lam, depth)
        elif self.kind == "geometric":
            return ErrorSchedule.geometric(self.a, depth)
        elif self.kind == "explicit":
            if n is not None and n != len(self.rates):
                raise ScheduleParseError(
                    "explicit schedules have a fixed depth; cannot override N"
                )
            mode = Mode.ADDITIVE if self.additive else Mode.MULTIPLICATIVE
            return ErrorSchedule.explicit(self.rates, mode)
        else:  # pragma: no cover - kinds are fixed at parse time
            raise ScheduleParseError(f"unknown schedule kind {self.kind!r}")
        if self.additive:
            schedule = ErrorSchedule.explicit(schedule.rates, Mode.ADDITIVE)
        return schedule


def _parse_kv(args: str, expected: tuple[str, ...], text: str) -> dict[str, str]:
    found: dict[str, str] = {}
    for token in args.split(","):
        key, sep, value = token.partition("=")
        key = key.strip().lower()
        if not sep or key not in expected:
            raise ScheduleParseError(
                f"bad schedule argument {token!r} in {text!r}; expected keys {expected}"
            )
        if key in found:
            raise ScheduleParseError(f"duplicate key {key!r} in {text!r}")
        found[key] = value.strip()
    missing = [k for k in expected if k not in found]
    if missing:
        raise ScheduleParseError(f"schedule {text!r} missing keys {missing}")
    return found


def _to_float(value: str, text: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ScheduleParseError(f"bad number {value!r} in schedule {text!r}") from None


def _to_int(value: str, text: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ScheduleParseError(f"bad integer {value!r} in schedule {text!r}") from None


def parse_schedule_spec(text: str) -> ScheduleSpec:
    """Parse the schedule grammar into a ScheduleSpec.

    Grammar: ``constant:a=<real>,N=<int>`` | ``bleed:a1=<real>,lambda=<real>,N=<int>``
    | ``geometric:a=<real>,N=<int>`` | ``explicit:<comma-separated reals>``,
    each with optional suffix ``;mode=additive``.
    """
    body = text.strip()
    additive = False
    if ";" in body:
        body, _, suffix = body.partition(";")
        if suffix.strip().lower() != "mode=additive":
            raise ScheduleParseError(f"unrecognized schedule suffix {suffix!r}")
        additive = True
    kind, sep, args = body.strip().partition(":")
    kind = kind.strip().lower()
    if not sep or kind not in ("constant", "bleed", "geometric", "explicit"):
        raise ScheduleParseError(
            f"schedule {text!r} must start with constant:, bleed:, geometric: or explicit:"
        )
    if kind == "explicit":
        tokens = [tok for tok in args.split(",") if tok.strip()]
        rates = tuple(_to_float(tok, text) for tok in tokens)
        return ScheduleSpec(kind=kind, n=len(rates), rates=rates, additive=additive)
    if kind == "bleed":
        kv = _parse_kv(args, ("a1", "lambda", "n"), text)
        return ScheduleSpec(
            kind=kind,
            n=_to_int(kv["n"], text),
            a1=_to_float(kv["a1"], text),
            lam=_to_float(kv["lambda"], text),
            additive=additive,
        )
    kv = _parse_kv(args, ("a", "n"), text)
    return ScheduleSpec(
        kind=kind,
        n=_to_int(kv["n"], text),
        a=_to_float(kv["a"], text),
        additive=additive or kind == "geometric",
    )


def parse_schedule(text: str) -> ErrorSchedule:
    """Parse the schedule grammar directly into an ErrorSchedule."""
    return parse_schedule_spec(text).to_schedule()
