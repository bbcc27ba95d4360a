"""Branch construction: sign matrices, scale sets, mixtures, and the
schedule grammar."""

import math
from itertools import product

import numpy as np
import pytest

from branchvol.branching import (
    EnumerationLimitError,
    ErrorSchedule,
    GaussianBase,
    Mode,
    NonPositiveScaleError,
    ScheduleParseError,
    build_mixture,
    build_scale_set,
    build_sign_matrix,
    parse_schedule,
    parse_schedule_spec,
    variance_preserving_pair,
)

# Canonical depth-3 sign matrix: binary counting, +1 first, last column fastest.
T3 = np.array(
    [
        [1, 1, 1],
        [1, 1, -1],
        [1, -1, 1],
        [1, -1, -1],
        [-1, 1, 1],
        [-1, 1, -1],
        [-1, -1, 1],
        [-1, -1, -1],
    ]
)


class TestSignMatrix:
    def test_depth_zero(self):
        m = build_sign_matrix(0)
        assert m.shape == (1, 0)

    def test_depth_one(self):
        assert build_sign_matrix(1).tolist() == [[1], [-1]]

    def test_depth_three_canonical_order(self):
        assert np.array_equal(build_sign_matrix(3), T3)

    def test_rows_distinct_and_complete(self):
        for n in range(13):
            m = build_sign_matrix(n)
            rows = {tuple(int(v) for v in row) for row in m}
            assert len(rows) == 2**n
            assert rows == set(product((1, -1), repeat=n))

    def test_enumeration_ceiling(self):
        with pytest.raises(EnumerationLimitError):
            build_sign_matrix(25)
        with pytest.raises(ValueError):
            build_sign_matrix(-1)


class TestErrorSchedule:
    def test_constructors(self):
        assert ErrorSchedule.constant(0.1, 3).rates == (0.1, 0.1, 0.1)
        bleed = ErrorSchedule.bleed(0.2, 0.9, 3)
        assert bleed.rates == pytest.approx((0.2, 0.18, 0.162), rel=1e-15)
        geo = ErrorSchedule.geometric(0.1, 3)
        assert geo.mode is Mode.ADDITIVE
        assert geo.rates == pytest.approx((0.1, 0.01, 0.001), rel=1e-15)
        assert ErrorSchedule.explicit([0.3, 0.1]).depth == 2

    def test_empty_schedule_allowed(self):
        assert ErrorSchedule.constant(0.1, 0).depth == 0

    def test_rate_range_enforced(self):
        with pytest.raises(ValueError):
            ErrorSchedule.constant(1.0, 2)
        with pytest.raises(ValueError):
            ErrorSchedule.explicit([-0.1])

    def test_additive_requires_power_sequence(self):
        with pytest.raises(ValueError):
            ErrorSchedule.explicit([0.1, 0.1], Mode.ADDITIVE)
        # The genuine power sequence passes.
        ErrorSchedule.explicit([0.1, 0.01, 0.001], Mode.ADDITIVE)


class TestScaleSet:
    def test_zero_rate_gives_unit_scales(self):
        ss = build_scale_set(ErrorSchedule.constant(0.0, 5))
        assert np.all(ss.scales == 1.0)
        assert ss.weight == 2.0**-5

    def test_depth_three_extremes(self):
        ss = build_scale_set(ErrorSchedule.constant(0.1, 3))
        assert math.isclose(ss.scales.min(), 0.9**3, rel_tol=1e-15)
        assert math.isclose(ss.scales.max(), 1.1**3, rel_tol=1e-15)
        # First branch (all +1 signs) is the all-up product, last is all-down.
        assert math.isclose(ss.scales[0], 1.1**3, rel_tol=1e-15)
        assert math.isclose(ss.scales[-1], 0.9**3, rel_tol=1e-15)

    def test_additive_offsets(self):
        ss = build_scale_set(ErrorSchedule.geometric(0.1, 3))
        expected = sorted(
            1.0 + s1 * 0.1 + s2 * 0.01 + s3 * 0.001
            for s1, s2, s3 in product((1, -1), repeat=3)
        )
        assert np.allclose(np.sort(ss.scales), expected, rtol=1e-15)
        assert math.isclose(ss.scales.min(), 0.889, rel_tol=1e-12)
        assert math.isclose(ss.scales.max(), 1.111, rel_tol=1e-12)

    def test_mean_scale_is_one(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            n = int(rng.integers(0, 11))
            style = rng.integers(0, 3)
            if style == 0:
                sched = ErrorSchedule.constant(float(rng.uniform(0, 0.5)), n)
            elif style == 1:
                sched = ErrorSchedule.bleed(
                    float(rng.uniform(0, 0.5)), float(rng.uniform(0, 1)), n
                )
            else:
                sched = ErrorSchedule.explicit(rng.uniform(0, 0.9, size=n))
            ss = build_scale_set(sched)
            assert abs(float(np.mean(ss.scales)) - 1.0) < 1e-12

    def test_binomial_collapse_multiset_dyadic_exact(self):
        # With a = 0.5 the factors 1.5 and 0.5 are dyadic, so every product
        # is exact and the multiset match is bitwise.
        for n in range(1, 13):
            ss = build_scale_set(ErrorSchedule.constant(0.5, n))
            expected = np.sort(
                np.array(
                    [
                        1.5**j * 0.5 ** (n - j)
                        for j in range(n + 1)
                        for _ in range(math.comb(n, j))
                    ]
                )
            )
            assert np.array_equal(np.sort(ss.scales), expected)

    def test_binomial_collapse_multiset_generic(self):
        a = 0.1
        for n in (4, 8, 12):
            ss = build_scale_set(ErrorSchedule.constant(a, n))
            expected = np.sort(
                np.array(
                    [
                        (1 + a) ** j * (1 - a) ** (n - j)
                        for j in range(n + 1)
                        for _ in range(math.comb(n, j))
                    ]
                )
            )
            assert np.allclose(np.sort(ss.scales), expected, rtol=4e-15)
            # Multiplicities are exactly binomial: count branches by sign sum.
            signs = build_sign_matrix(n)
            ups = ((signs + 1) // 2).sum(axis=1)
            for j in range(n + 1):
                assert int(np.count_nonzero(ups == j)) == math.comb(n, j)

    def test_additive_nonpositive_scale_rejected(self):
        with pytest.raises(NonPositiveScaleError) as err:
            build_scale_set(ErrorSchedule.geometric(0.6, 3))
        assert "branch" in str(err.value)


class TestMixture:
    def test_depth_zero_is_base_gaussian(self):
        mix = build_mixture(GaussianBase(0.5, 2.0), ErrorSchedule.constant(0.3, 0))
        assert mix.n_components == 1
        assert mix.weight == 1.0
        assert mix.component_sigmas.tolist() == [2.0]

    def test_depth_one_split(self):
        mix = build_mixture(GaussianBase(0.0, 1.5), ErrorSchedule.constant(0.2, 1))
        assert sorted(mix.component_sigmas.tolist()) == pytest.approx([1.2, 1.8], rel=1e-15)
        assert mix.weight == 0.5

    def test_depth_two_scales(self):
        mix = build_mixture(GaussianBase(), ErrorSchedule.constant(0.1, 2))
        assert np.allclose(np.sort(mix.scales), [0.81, 0.99, 0.99, 1.21], rtol=1e-15)

    def test_base_validation(self):
        with pytest.raises(ValueError):
            GaussianBase(0.0, 0.0)
        with pytest.raises(ValueError):
            GaussianBase(math.nan, 1.0)


class TestVariancePreservingPair:
    def test_degenerate(self):
        assert variance_preserving_pair(1.0, 0.0) == (1.0, 1.0)

    def test_half(self):
        low, high = variance_preserving_pair(1.0, 0.5)
        assert low == 0.5
        assert math.isclose(high, math.sqrt(1.75), rel_tol=1e-15)

    def test_mean_square_invariant(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            sigma = float(rng.uniform(0.2, 5.0))
            v = float(rng.uniform(0.0, 0.999))
            low, high = variance_preserving_pair(sigma, v)
            assert math.isclose((low**2 + high**2) / 2.0, sigma**2, rel_tol=1e-14)

    def test_domain(self):
        with pytest.raises(ValueError):
            variance_preserving_pair(1.0, 1.0)
        with pytest.raises(ValueError):
            variance_preserving_pair(1.0, -0.1)
        with pytest.raises(ValueError):
            variance_preserving_pair(0.0, 0.5)


class TestScheduleGrammar:
    def test_constant(self):
        sched = parse_schedule("constant:a=0.1,N=5")
        assert sched.rates == (0.1,) * 5
        assert sched.mode is Mode.MULTIPLICATIVE

    def test_bleed(self):
        sched = parse_schedule("bleed:a1=0.2,lambda=0.9,N=3")
        assert sched.rates == pytest.approx((0.2, 0.18, 0.162), rel=1e-15)

    def test_geometric_is_additive(self):
        sched = parse_schedule("geometric:a=0.1,N=3")
        assert sched.mode is Mode.ADDITIVE
        assert sched.rates == pytest.approx((0.1, 0.01, 0.001), rel=1e-15)

    def test_explicit(self):
        sched = parse_schedule("explicit:0.1,0.2,0.3")
        assert sched.rates == (0.1, 0.2, 0.3)

    def test_explicit_additive_suffix(self):
        sched = parse_schedule("explicit:0.1,0.01,0.001;mode=additive")
        assert sched.mode is Mode.ADDITIVE

    def test_depth_override(self):
        spec = parse_schedule_spec("constant:a=0.1,N=5")
        assert spec.to_schedule(2).depth == 2
        with pytest.raises(ScheduleParseError):
            parse_schedule_spec("explicit:0.1,0.2").to_schedule(3)

    @pytest.mark.parametrize(
        "bad",
        [
            "nope:a=0.1,N=5",
            "constant:a=0.1",
            "constant:a=x,N=2",
            "constant:a=0.1,N=2.5",
            "constant:a=0.1,N=2,z=3",
            "bleed:a1=0.2,N=3",
            "explicit:0.1,zz",
            "constant:a=0.1,N=2;mode=weird",
            "constant",
        ],
    )
    def test_parse_errors(self, bad):
        with pytest.raises(ScheduleParseError):
            parse_schedule(bad)

    def test_additive_suffix_on_constant_violates_invariant(self):
        with pytest.raises(ValueError):
            parse_schedule("constant:a=0.1,N=3;mode=additive")
