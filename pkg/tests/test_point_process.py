"""Seeded streams and the three point-process samplers."""

import numpy as np
import pytest

from maxstorm import (
    Rectangle,
    ResourceError,
    SeededStream,
    ValidationError,
    sample_integer_poisson,
    sample_planar_poisson,
    sample_storm_intensities,
)


class TestSeededStream:
    def test_same_seed_reproduces_draws(self):
        a = SeededStream(7).generator().uniform(size=5)
        b = SeededStream(7).generator().uniform(size=5)
        np.testing.assert_array_equal(a, b)

    def test_children_are_distinct_and_stable(self):
        root = SeededStream(7)
        c0 = root.child(0).generator().uniform(size=4)
        c1 = root.child(1).generator().uniform(size=4)
        assert not np.array_equal(c0, c1)
        np.testing.assert_array_equal(c0, SeededStream(7).child(0).generator().uniform(size=4))

    def test_child_draws_do_not_depend_on_access_order(self):
        root = SeededStream(11)
        first = root.child(3).generator().uniform()
        root2 = SeededStream(11)
        root2.child(9).generator().uniform()
        assert root2.child(3).generator().uniform() == first

    def test_nested_paths_address_distinct_streams(self):
        root = SeededStream(5)
        a = root.child(1).child(2).generator().uniform()
        b = root.child(1, 2).generator().uniform()
        assert a == b
        assert a != root.child(2).child(1).generator().uniform()


class TestStormIntensities:
    def test_intensities_strictly_decreasing(self):
        seq = sample_storm_intensities(SeededStream(1), 0.01)
        vals = seq.intensities
        assert np.all(np.diff(vals) < 0)
        assert np.all(vals >= 0.01)

    def test_count_mean_matches_inverse_threshold(self):
        # Number of arrivals above threshold u is Poisson(1/u).
        counts = [
            sample_storm_intensities(SeededStream(100 + i), 1.0).intensities.size
            for i in range(10000)
        ]
        mean = np.mean(counts)
        se = np.std(counts, ddof=1) / np.sqrt(len(counts))
        assert abs(mean - 1.0) <= 3 * se

    def test_first_intensity_is_frechet(self):
        # First arrival is 1/Exp(1), standard Frechet; threshold 0.01 keeps it
        # with probability 1 - e^{-100}.
        draws = np.array([
            sample_storm_intensities(SeededStream(20000 + i), 0.01).intensities[0]
            for i in range(10000)
        ])
        for z in (0.5, 1.0, 2.0):
            assert abs(np.mean(draws <= z) - np.exp(-1.0 / z)) < 0.02

    def test_threshold_above_first_draw_gives_empty(self):
        seq = sample_storm_intensities(SeededStream(1), 1e12)
        assert seq.intensities.size == 0

    def test_cap_exhaustion_raises_resource_error(self):
        with pytest.raises(ResourceError):
            sample_storm_intensities(SeededStream(1), 1e-9, cap=10)

    def test_nonpositive_threshold_rejected(self):
        with pytest.raises(ValidationError):
            sample_storm_intensities(SeededStream(1), 0.0)


class TestPlanarPoisson:
    def test_mean_count_matches_rate_times_area(self):
        window = Rectangle((0.0, 0.0), (1.0, 1.0))
        counts = [
            len(sample_planar_poisson(SeededStream(i), window, 1.0).points)
            for i in range(10000)
        ]
        mean = np.mean(counts)
        se = np.std(counts, ddof=1) / np.sqrt(len(counts))
        assert abs(mean - 1.0) <= 3 * se

    def test_rate_zero_always_empty(self):
        window = Rectangle((0.0, 0.0), (2.0, 2.0))
        out = sample_planar_poisson(SeededStream(3), window, 0.0)
        assert out.points == ()

    def test_points_inside_window_and_marginally_uniform(self):
        window = Rectangle((0.0, 0.0), (1.0, 1.0))
        xs = []
        for i in range(2000):
            pts = sample_planar_poisson(SeededStream(50000 + i), window, 5.0).points
            for p in pts:
                assert 0.0 <= p.x1 <= 1.0 and 0.0 <= p.x2 <= 1.0
            xs.extend(p.x1 for p in pts)
        xs = np.sort(np.array(xs))
        grid = (np.arange(xs.size) + 1) / xs.size
        ks = np.max(np.abs(grid - xs))
        assert ks < 0.02


class TestIntegerPoisson:
    def test_single_integer_pmf(self):
        draws = np.array([
            sample_integer_poisson(SeededStream(i), 0, 0).counts[0] for i in range(10000)
        ])
        for k, pmf in ((0, np.exp(-1.0)), (1, np.exp(-1.0)), (2, np.exp(-1.0) / 2)):
            assert abs(np.mean(draws == k) - pmf) < 0.02

    def test_range_total_is_poisson_sum(self):
        totals = [
            sum(sample_integer_poisson(SeededStream(70000 + i), 0, 9).counts.values())
            for i in range(10000)
        ]
        mean = np.mean(totals)
        se = np.std(totals, ddof=1) / np.sqrt(len(totals))
        assert abs(mean - 10.0) <= 3 * se

    def test_empty_interval_yields_empty_sample(self):
        assert sample_integer_poisson(SeededStream(1), 5, 4).counts == {}

    def test_deterministic_per_stream(self):
        a = sample_integer_poisson(SeededStream(42), -3, 3).counts
        b = sample_integer_poisson(SeededStream(42), -3, 3).counts
        assert a == b
