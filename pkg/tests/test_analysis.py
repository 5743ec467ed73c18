import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strat.analysis import (
    SPECTRA,
    GaussianSetup,
    build_two_plane,
    curve_setup,
    excess_risk_curve,
    gaussian_excess_risk,
    monte_carlo_excess_risk,
    spectrum,
    two_plane_sample_check,
    zero_error_band,
)
from strat.core import Classifier, CostModel, PNormSpec, StrategicParams
from strat.data import RngSpec, sample_two_plane
from strat.response import strategic_01_risk

ONE = StrategicParams(1.0)
C1, C4 = CostModel(PNormSpec(2), [1.0]), CostModel(PNormSpec(2), [4.0])


def _setup(m, s, eps):
    """1-d setup whose threshold shift is exactly ``eps``: the true cost is chosen to match."""
    assumed = CostModel(PNormSpec(2), [1.0])
    # dual norm under eig e is 1/sqrt(e) * |mu|; solve shift = u * m * |1 - 1/sqrt(e)| / m.
    true = CostModel(PNormSpec(2), [1.0 / (1.0 + eps) ** 2])
    return GaussianSetup(np.array([m]), s * s, true, assumed, 1.0)


class TestTwoPlane:
    def test_offset_example(self):
        dist = build_two_plane(C1, C4, 0.3, 1.0, ONE, [1.0])
        assert dist.r == pytest.approx(1 / 6)
        assert dist.thickness == pytest.approx(0.01 / 6)
        assert not dist.swapped

    def test_swaps_to_positive_offset(self):
        dist = build_two_plane(C4, C1, 0.3, 1.0, ONE, [1.0])
        assert dist.swapped and dist.r == pytest.approx(1 / 6)
        assert dist.c1 == C1

    def test_errors(self):
        with pytest.raises(ValueError, match="same dual norm"):
            build_two_plane(C1, C1, 0.3, 1.0, ONE, [1.0])
        with pytest.raises(ValueError):
            build_two_plane(C1, C4, 0.3, 0.5, ONE, [1.0])
        with pytest.raises(ValueError):
            build_two_plane(C1, C4, 0.3, 1.0, StrategicParams(0.0), [1.0])
        with pytest.raises(ValueError):
            build_two_plane(C1, C4, 0.7, 1.0, ONE, [1.0])

    @given(
        st.floats(0.1, 10), st.floats(0.1, 10), st.floats(0.05, 3), st.floats(0.1, 1.0), st.floats(0, 0.5)
    )
    def test_bands_disjoint(self, e1, e2, u, alpha, eps_mix):
        a, b = CostModel(PNormSpec(2), [e1, 1.0]), CostModel(PNormSpec(2), [e2, 1.0])
        params = StrategicParams(u)
        try:
            dist = build_two_plane(a, b, eps_mix, 1.0, params, [0.6, 0.0])
        except ValueError:
            return
        lo1, hi1 = zero_error_band(dist, dist.c1, params, alpha)
        lo2, hi2 = zero_error_band(dist, dist.c2, params, alpha)
        assert hi1 <= lo2 or hi2 <= lo1

    def test_bands_monte_carlo(self):
        dist = build_two_plane(C1, C4, 0.3, 1.0, ONE, [1.0])
        data = sample_two_plane(dist, 100_000, RngSpec(3))
        assert two_plane_sample_check(dist, data) <= dist.thickness / 2
        for own, cross, expect in ((dist.c1, dist.c2, 0.3), (dist.c2, dist.c1, 0.7)):
            lo, hi = zero_error_band(dist, own, ONE, 1.0)
            mid = Classifier([1.0], 0.5 * (lo + hi))
            assert strategic_01_risk(data, mid, own, ONE) <= 0.001
            assert strategic_01_risk(data, mid, cross, ONE) == pytest.approx(expect, abs=0.01)
            width = hi - lo
            for b in (lo - 0.05 * width, hi + 0.05 * width):
                err = strategic_01_risk(data, Classifier([1.0], b), own, ONE)
                assert err >= min(0.3, 0.7) - 0.01

    def test_band_alpha_range(self):
        dist = build_two_plane(C1, C4, 0.3, 1.0, ONE, [1.0])
        with pytest.raises(ValueError):
            zero_error_band(dist, C1, ONE, 1.5)


class TestGaussian:
    def test_hand_value(self):
        assert gaussian_excess_risk(_setup(1.0, 1.0, 1.0)) == pytest.approx(0.10272, abs=5e-6)

    def test_equal_costs_give_zero(self):
        c = CostModel(PNormSpec(2), [0.5, 2.0])
        setup = GaussianSetup(np.array([0.3, -0.4]), 0.7, c, c, 2.0)
        assert gaussian_excess_risk(setup) == 0.0
        est, se = monte_carlo_excess_risk(setup, 20_000, 1)
        assert est == 0.0 and se == 0.0

    def test_zero_mean_rejected(self):
        setup = GaussianSetup(np.zeros(2), 1.0, C1.__class__.identity(2), C1.__class__.identity(2), 1.0)
        with pytest.raises(ValueError, match="mu0"):
            gaussian_excess_risk(setup)

    def test_monte_carlo_agrees_and_is_nonnegative(self):
        cost = CostModel(PNormSpec(2), [1.0, 1.0, 1.0, 1.0])
        setup = GaussianSetup(np.full(4, 0.5), 0.25, cost, CostModel(PNormSpec(2), [0.01] * 4), 1.0)
        est, se = monte_carlo_excess_risk(setup, 200_000, 5)
        assert abs(est - gaussian_excess_risk(setup)) <= 3 * se
        assert est >= -3 * se

    def test_monte_carlo_minimum_size(self):
        with pytest.raises(ValueError):
            monte_carlo_excess_risk(_setup(1.0, 1.0, 1.0), 999, 0)

    @given(st.floats(0.01, 5), st.floats(0.1, 5), st.floats(0, 20))
    def test_bounds(self, m, s, eps):
        val = gaussian_excess_risk(_setup(m, s, eps))
        assert -1e-15 <= val <= 0.5

    def test_monotone_in_shift(self):
        for ratio in (0.2, 1.0, 3.0):
            vals = [gaussian_excess_risk(_setup(ratio, 1.0, e)) for e in np.linspace(0, 10, 101)]
            assert np.all(np.diff(vals) >= -1e-15)


class TestCurve:
    def test_zero_error_curve(self):
        for name in SPECTRA:
            assert all(v == 0.0 for _, v in excess_risk_curve([1, 4, 64], name, 0.0, ONE))

    def test_harmonic_curve_grows(self):
        ds = list(range(2, 257, 2))
        vals = [v for _, v in excess_risk_curve(ds, "harmonic", 0.5, ONE)]
        assert np.all(np.diff(vals) >= -1e-12) and vals[-1] > 0.4

    def test_d1_matches_direct_call(self):
        for name in SPECTRA:
            direct = gaussian_excess_risk(curve_setup(1, name, 0.3, 1.0))
            assert excess_risk_curve([1], name, 0.3, ONE) == [(1, direct)]

    def test_spectra(self):
        assert spectrum("geometric", 3) == pytest.approx([0.5, 0.25, 0.125])
        assert spectrum("polynomial", 2) == pytest.approx([1.0, 0.25])
        with pytest.raises(ValueError, match="constant"):
            spectrum("cubic", 3)

    def test_setup_errors(self):
        with pytest.raises(ValueError):
            curve_setup(0, "constant", 0.1, 1.0)
        with pytest.raises(ValueError):
            curve_setup(3, "constant", 1.0, 1.0)

    def test_tiny_eigen_error_resolved(self):
        val = gaussian_excess_risk(curve_setup(16, "harmonic", math.exp(-10), 1.0))
        assert 0 < val < 1e-3
        near_total = gaussian_excess_risk(curve_setup(16, "harmonic", 1 - math.exp(-10), 1.0))
        assert near_total > 0.4
