"""Extremal coefficients, madogram maps, and their empirical estimators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maxstorm import (
    LagSpec,
    MadogramEstimate,
    MarkovParams,
    SeededStream,
    SiteSet,
    SmithParams,
    ValidationError,
    empirical_madogram,
    extremal_coefficient,
    f_madogram,
    frechet_cdf,
    madogram_to_theta,
    pool_madograms,
    simulate_markov_planar,
    square_grid,
    theta_to_madogram,
)


class TestFrechetCdf:
    def test_values_and_vectorization(self):
        assert frechet_cdf(1.0) == pytest.approx(np.exp(-1.0), rel=1e-14)
        np.testing.assert_allclose(frechet_cdf(np.array([0.5, 2.0])), np.exp([-2.0, -0.5]))

    def test_nonpositive_argument_has_zero_mass(self):
        assert frechet_cdf(0.0) == 0.0
        assert frechet_cdf(-3.0) == 0.0
        np.testing.assert_array_equal(frechet_cdf(np.array([-1.0, 0.0])), [0.0, 0.0])


class TestExtremalCoefficient:
    def test_zero_lag_is_complete_dependence(self, smith_identity, markov_standard):
        assert extremal_coefficient(LagSpec(0, (0.0, 0.0)), smith_identity, markov_standard) == 1.0

    def test_moving_frame_lags_decay_geometrically(self, smith_identity, markov_standard):
        # Space lag equal to l*tau leaves only the innovation contribution
        # 1 - a^l on top of complete dependence.
        for l in (1, 2, 3):
            got = extremal_coefficient(LagSpec(l, (-1.0 * l, -1.0 * l)), smith_identity, markov_standard)
            assert got == pytest.approx(2.0 - 0.7 ** l, rel=1e-12)

    def test_fixed_site_temporal_lag_value(self, smith_identity, markov_standard):
        got = extremal_coefficient(LagSpec(1, (0.0, 0.0)), smith_identity, markov_standard)
        assert got == pytest.approx(1.604086183455616, rel=1e-12)

    def test_pure_spatial_lag_matches_pair_exponent(self, smith_identity, markov_standard):
        got = extremal_coefficient(LagSpec(0, (2.0, 0.0)), smith_identity, markov_standard)
        assert got == pytest.approx(1.6826894921370859, rel=1e-12)

    def test_long_lags_approach_independence(self, smith_identity, markov_standard):
        got = extremal_coefficient(LagSpec(30, (0.0, 0.0)), smith_identity, markov_standard)
        assert got >= 1.99
        assert got <= 2.0

    def test_negative_time_lag_is_symmetric(self, smith_identity, markov_standard):
        fwd = extremal_coefficient(LagSpec(2, (0.5, 0.25)), smith_identity, markov_standard)
        bwd = extremal_coefficient(LagSpec(-2, (-0.5, -0.25)), smith_identity, markov_standard)
        assert fwd == pytest.approx(bwd, rel=1e-12)

    @settings(max_examples=60, deadline=None)
    @given(
        l=st.integers(0, 12),
        h1=st.floats(-6, 6),
        h2=st.floats(-6, 6),
        a=st.floats(0.05, 0.95),
    )
    def test_always_within_pair_bounds(self, l, h1, h2, a):
        theta = extremal_coefficient(
            LagSpec(l, (h1, h2)), SmithParams(1.0, 0.0, 1.0), MarkovParams(a, tau=(-1.0, -1.0))
        )
        assert 1.0 <= theta <= 2.0


class TestMadogramMaps:
    def test_known_values(self):
        assert theta_to_madogram(1.0) == 0.0
        assert theta_to_madogram(2.0) == pytest.approx(1.0 / 6.0, rel=1e-14)
        assert madogram_to_theta(0.0) == 1.0
        assert madogram_to_theta(1.0 / 6.0) == pytest.approx(2.0, rel=1e-14)
        assert madogram_to_theta(0.1) == pytest.approx(1.5, rel=1e-14)

    @settings(max_examples=200, deadline=None)
    @given(theta=st.floats(1.0, 2.0))
    def test_roundtrip_is_identity(self, theta):
        assert madogram_to_theta(theta_to_madogram(theta)) == pytest.approx(theta, abs=1e-12)

    def test_lag_level_map_composes_with_extremal_coefficient(self, smith_identity, markov_standard):
        lag = LagSpec(1, (0.0, 0.0))
        nu = f_madogram(lag, smith_identity, markov_standard)
        assert madogram_to_theta(nu) == pytest.approx(
            extremal_coefficient(lag, smith_identity, markov_standard), rel=1e-12
        )

    def test_out_of_range_inputs_rejected(self):
        with pytest.raises(ValidationError):
            madogram_to_theta(0.5)
        with pytest.raises(ValidationError):
            theta_to_madogram(2.5)


class TestEmpiricalMadogram:
    def test_duplicated_site_zero_lag_gives_zero(self, smith_identity, markov_standard):
        sites = SiteSet.planar(np.array([[0.0, 0.0], [0.0, 0.0]]))
        f = simulate_markov_planar(sites, 3, smith_identity, markov_standard, SeededStream(1))
        est = empirical_madogram(f, LagSpec(0, (0.0, 0.0)))
        assert est.nu_hat == 0.0

    def test_hand_computed_two_by_two(self, smith_identity, markov_standard):
        sites = SiteSet.planar(np.array([[0.0, 0.0], [-1.0, -1.0]]))
        f = simulate_markov_planar(sites, 2, smith_identity, markov_standard, SeededStream(2))
        est = empirical_madogram(f, LagSpec(1, (-1.0, -1.0)))
        # Exactly one ordered pair matches: date 1 site 0 with date 2 site 1.
        u = frechet_cdf(f.values)
        assert est.n_pairs == 1
        assert est.nu_hat == pytest.approx(0.5 * abs(u[1, 1] - u[0, 0]), rel=1e-14)

    def test_no_matching_pair_raises(self, smith_identity, markov_standard):
        sites = SiteSet.planar(np.array([[0.0, 0.0], [1.0, 0.0]]))
        f = simulate_markov_planar(sites, 2, smith_identity, markov_standard, SeededStream(3))
        with pytest.raises(ValidationError):
            empirical_madogram(f, LagSpec(5, (0.0, 0.0)))
        with pytest.raises(ValidationError):
            empirical_madogram(f, LagSpec(1, (0.33, 0.0)))

    def test_bin_radius_admits_nearby_offsets(self, smith_identity, markov_standard):
        sites = SiteSet.planar(np.array([[0.0, 0.0], [1.05, 0.0]]))
        f = simulate_markov_planar(sites, 2, smith_identity, markov_standard, SeededStream(4))
        est = empirical_madogram(f, LagSpec(1, (1.0, 0.0)), bin_radius=0.1)
        assert est.n_pairs >= 1

    def test_simulated_moving_frame_lag_matches_analytic(self, smith_identity, markov_standard):
        grid = square_grid(3)
        stream = SeededStream(868686)
        ests = [
            empirical_madogram(
                simulate_markov_planar(grid, 4, smith_identity, markov_standard, stream.child(r)),
                LagSpec(1, (-1.0, -1.0)),
            )
            for r in range(500)
        ]
        theta = madogram_to_theta(pool_madograms(ests).nu_hat)
        assert abs(theta - 1.3) < 0.05

    def test_independent_dates_give_full_independence(self):
        # A hand-built field of iid margins has extremal coefficient 2 at any
        # positive lag.
        rng = np.random.default_rng(77)
        vals = 1.0 / -np.log(rng.uniform(size=(5000, 1)))
        field = _make_field(vals, np.array([[0.0, 0.0]]))
        est = empirical_madogram(field, LagSpec(1, (0.0, 0.0)))
        theta = madogram_to_theta(est.nu_hat)
        assert abs(theta - 2.0) < 0.05


class TestPooling:
    def test_pair_count_weighting(self):
        pooled = pool_madograms([MadogramEstimate(0.1, 1), MadogramEstimate(0.4, 3)])
        assert pooled.nu_hat == pytest.approx(0.325, rel=1e-14)
        assert pooled.n_pairs == 4

    def test_empty_list_rejected(self):
        with pytest.raises(ValidationError):
            pool_madograms([])


def _make_field(values, coords):
    from maxstorm import SpaceTimeField

    return SpaceTimeField(
        sites=SiteSet.planar(coords),
        dates=np.arange(1, values.shape[0] + 1),
        values=values,
    )
