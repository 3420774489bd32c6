import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from platoonlink.exceptions import GainInfeasibleError, NonRealSpectrumError
from platoonlink.model import PlatoonSpec
from platoonlink.stability import (GainPremiseWarning, build_dynamics,
                                   plant_threshold, stability_report,
                                   string_quartic, string_threshold,
                                   transfer_magnitude)


def spec_with(a, b, followers=6, v_max=30.0, d_sparse=35.0, d_dense=5.0):
    return PlatoonSpec(follower_count=followers, target_spacing=20.0,
                       target_velocity=15.0, gain_a=a, gain_b=b,
                       v_max=v_max, d_sparse=d_sparse, d_dense=d_dense)


class TestBuildDynamics:
    def test_single_follower_matrices(self):
        dyn = build_dynamics(spec_with(2.0, 2.0, followers=1))
        assert np.allclose(dyn.m1, [[0.0, -1.0], [0.0, -4.0]])
        assert np.allclose(dyn.m2[0], [[0.0, 0.0], [2.0, 0.0]])
        assert dyn.const_a == pytest.approx(2.0)
        assert dyn.const_b == pytest.approx(2.0)
        assert dyn.const_c == pytest.approx(4.0)

    def test_two_followers_coupling_entry(self):
        dyn = build_dynamics(spec_with(2.0, 2.0, followers=2))
        # delayed block of link 2 couples to the predecessor's velocity
        assert dyn.m2[1][3, 2] == pytest.approx(2.0)
        assert dyn.m2[0][2, 0] == pytest.approx(2.0)

    def test_block_product_structure(self):
        dyn = build_dynamics(spec_with(2.0, 2.0, followers=4))
        m2 = dyn.m2
        assert np.linalg.norm(m2[1] @ m2[0]) > 0.0
        for i in range(4):
            for j in range(4):
                if j != i - 1:
                    assert np.allclose(m2[i] @ m2[j], 0.0)

    def test_block_form_of_m1(self):
        dyn = build_dynamics(spec_with(3.0, 1.0, followers=3))
        m = 3
        assert np.allclose(dyn.m1[:m, :m], 0.0)
        assert np.allclose(dyn.m1[m:, :m], 0.0)
        omega1 = dyn.m1[:m, m:]
        assert np.allclose(np.diag(omega1), -1.0)
        assert np.allclose(np.diag(omega1, k=-1), 1.0)
        assert np.allclose(dyn.m1[m:, m:], -4.0 * np.eye(m))


def closed_form_tau1(a, b, followers, k, ratio=1.0):
    """Independent oracle from the block structure: the spectrum of M3
    repeats the 2x2 symbol eigenvalues C +- sqrt(C^2-4A), and the
    quadratic-history matrix is diagonal with known entries."""
    A, B, C = a * ratio, b, a + b
    lam_min = C - math.sqrt(C * C - 4.0 * A)
    lam_max = 2.0 * followers * k + A * A
    if followers >= 2:
        lam_max += (A - B * C) ** 2 + A * A * B * B
    if followers >= 3:
        lam_max += B ** 4
    return lam_min / lam_max


class TestPlantThreshold:
    def test_single_follower_closed_form(self):
        dyn = build_dynamics(spec_with(2.0, 2.0, followers=1))
        tau1 = plant_threshold(dyn, k=1.01)
        expected = (4.0 - 2.0 * math.sqrt(2.0)) / 6.02
        assert abs(tau1 - expected) < 1e-10

    def test_baseline_six_followers(self):
        dyn = build_dynamics(spec_with(2.0, 2.0))
        tau1 = plant_threshold(dyn, k=1.01)
        assert 0.012 <= tau1 <= 0.016
        # defective-spectrum scatter keeps the dense solver within about
        # a tenth of a percent of the structural value
        assert tau1 == pytest.approx(closed_form_tau1(2, 2, 6, 1.01), rel=5e-3)

    @given(a=st.floats(1.5, 4.0), b=st.floats(1.0, 4.0),
           m=st.integers(1, 8))
    def test_structural_oracle(self, a, b, m):
        dyn = build_dynamics(spec_with(a, b, followers=m))
        try:
            tau1 = plant_threshold(dyn, k=1.05)
        except (GainInfeasibleError, NonRealSpectrumError):
            return
        assert tau1 == pytest.approx(closed_form_tau1(a, b, m, 1.05), rel=2e-2)

    def test_monotone_nonincreasing_in_k(self):
        dyn = build_dynamics(spec_with(2.0, 2.0))
        taus = [plant_threshold(dyn, k=k)
                for k in (1.000001, 1.01, 1.05, 1.1, 1.5, 2.0)]
        assert all(t1 >= t2 - 1e-15 for t1, t2 in zip(taus, taus[1:]))

    def test_gain_condition_violation(self):
        with pytest.raises(GainInfeasibleError):
            plant_threshold(build_dynamics(spec_with(1.0, 0.0)), k=1.01)

    def test_k_must_exceed_one(self):
        dyn = build_dynamics(spec_with(2.0, 2.0))
        with pytest.raises(ValueError):
            plant_threshold(dyn, k=1.0)

    def test_non_real_spectrum(self):
        # printed gain condition holds but the map slope makes the
        # symbol discriminant negative: genuinely complex eigenvalues
        spec = spec_with(1.0, 1.5, followers=3, v_max=30.0,
                         d_sparse=12.5, d_dense=5.0)
        with pytest.raises(NonRealSpectrumError):
            plant_threshold(build_dynamics(spec), k=1.01)

    @given(a=st.floats(1.0, 5.0), b=st.floats(0.5, 5.0),
           m=st.integers(1, 7))
    def test_m4_symmetric(self, a, b, m):
        from platoonlink.stability import _m4
        dyn = build_dynamics(spec_with(a, b, followers=m))
        m4 = _m4(dyn, 1.3)
        assert np.abs(m4 - m4.T).max() < 1e-12


class TestStringThreshold:
    def test_baseline_exact(self):
        assert string_threshold(spec_with(2.0, 2.0)) == pytest.approx(0.5, abs=1e-12)

    def test_arithmetic_cases(self):
        assert string_threshold(spec_with(2.0, 1.0)) == pytest.approx(1.0 / 3.0)
        assert string_threshold(spec_with(4.0, 0.0)) == pytest.approx(0.25)
        assert string_threshold(spec_with(4.0, 2.0)) == pytest.approx(0.5)

    def test_infeasible_formula(self):
        with pytest.raises(GainInfeasibleError):
            string_threshold(spec_with(0.5, 0.5))

    def test_premise_warning_without_infeasibility(self):
        # wide ramp: formula feasible although a + 2b - 2 < 0
        spec = spec_with(1.5, 0.2, v_max=30.0, d_sparse=65.0, d_dense=5.0)
        with pytest.warns(GainPremiseWarning):
            tau2 = string_threshold(spec)
        assert tau2 == pytest.approx(1.35 / (2.0 * 0.75 * 1.7))


class TestStabilityReport:
    def test_baseline(self):
        report = stability_report(spec_with(2.0, 2.0), k=1.01)
        assert report.tau2 == pytest.approx(0.5)
        assert 0.012 <= report.tau1 <= 0.016
        assert report.tau_min == report.tau1  # plant binds
        assert report.plant_gain_condition_ok
        assert report.string_gain_condition_ok
        assert report.diagnostics == {}

    def test_condition_arithmetic(self):
        # a=b=2: 4+4+8-8 = 8 >= 0 and 2+4-2 = 4 >= 0
        report = stability_report(spec_with(2.0, 2.0))
        assert report.plant_gain_condition_ok
        assert report.string_gain_condition_ok

    def test_infeasible_gains_reported_per_field(self):
        report = stability_report(spec_with(0.5, 0.5))
        assert not report.plant_gain_condition_ok
        assert not report.string_gain_condition_ok
        assert report.tau1 is None and report.tau2 is None
        assert report.tau_min is None
        assert "tau1" in report.diagnostics and "tau2" in report.diagnostics


class TestStringMagnitudeOracle:
    """The Pade-free magnitude criterion validates tau2 where it is
    checkable: slightly below tau2 no frequency amplifies, at 1.5x some
    frequency does."""

    FREQS = np.logspace(-4, 2, 4000)

    @pytest.mark.parametrize("a,b", [(2.0, 2.0), (2.0, 1.0), (4.0, 2.0),
                                     (3.0, 3.0)])
    def test_below_threshold_no_amplification(self, a, b):
        spec = spec_with(a, b)
        tau2 = string_threshold(spec)
        mags = transfer_magnitude(self.FREQS, 0.98 * tau2, spec)
        assert mags.max() <= 1.0 + 1e-6

    @pytest.mark.parametrize("a,b", [(2.0, 2.0), (2.0, 1.0), (4.0, 2.0),
                                     (3.0, 3.0)])
    def test_above_threshold_amplifies(self, a, b):
        spec = spec_with(a, b)
        tau2 = string_threshold(spec)
        mags = transfer_magnitude(self.FREQS, 1.5 * tau2, spec)
        assert mags.max() > 1.0 + 1e-6

    def test_quartic_nonnegative_up_to_threshold(self):
        spec = spec_with(2.0, 2.0)
        tau2 = string_threshold(spec)
        freqs = np.linspace(1e-4, 50.0, 2000)
        for frac in (0.2, 0.6, 1.0):
            assert string_quartic(freqs, frac * tau2, spec).min() >= -1e-9

    def test_quartic_goes_negative_past_threshold(self):
        spec = spec_with(2.0, 2.0)
        tau2 = string_threshold(spec)
        freqs = np.linspace(1e-4, 50.0, 2000)
        assert string_quartic(freqs, 1.2 * tau2, spec).min() < 0.0
