import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ga_wqed.dynamics import ProbeTone, integrate_beta
from ga_wqed.errors import InvalidConfigurationError
from ga_wqed.model import AtomLayout, uniform_layout
from ga_wqed.scattering import (
    lamb_shift_and_decay,
    non_markovian_threshold,
    nonzero_side_peaks,
    reflection_t,
    scatter_spectrum,
    side_peaks,
    stationary_R,
    stationary_R_closed,
    stationary_T,
    transmission_t,
    zeta_of_t,
)

TWO_PI = 2 * math.pi


def test_point_atom_lorentzian():
    lay = uniform_layout(1, 1.0, "uniform", 1.0, 0.1)
    om = np.linspace(0.5, 1.5, 41)
    expected = 0.05 ** 2 / ((om - 1.0) ** 2 + 0.05 ** 2)
    np.testing.assert_allclose(stationary_R(lay, om), expected, rtol=1e-12)
    assert stationary_R(lay, 1.0) == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.sampled_from(["uniform", "alternating"]),
       st.floats(0.1, 10), st.floats(1e-4, 0.3), st.floats(0.2, 3.0))
def test_stationary_unitarity(n, pattern, ot, gt, ratio):
    lay = uniform_layout(n, 1.0, pattern, ot, gt)
    om = ratio * ot
    assert stationary_R(lay, om) + stationary_T(lay, om) == pytest.approx(1.0, abs=1e-9)


def test_unitarity_with_unequal_weights():
    lay = AtomLayout(2.0, 0.05, (0.0, 0.7, 2.1), (1.0, -0.4, 0.8))
    om = np.linspace(1.0, 3.0, 101)
    np.testing.assert_allclose(stationary_R(lay, om) + stationary_T(lay, om), 1.0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 20), st.floats(0.5, 7.0), st.floats(1e-3, 0.05), st.floats(0.7, 1.3))
def test_closed_form_matches_general(n, ot, gt, ratio):
    lay = uniform_layout(n, 1.0, "uniform", ot, gt)
    om = ratio * ot
    closed = stationary_R_closed(n, gt, ot, om, 1.0)
    assert closed == pytest.approx(stationary_R(lay, om), rel=1e-8, abs=1e-12)


def test_alternating_is_shifted_uniform():
    n, tau, omega, gamma = 6, 1.0, 3.0, 0.01
    om = np.linspace(2.5, 3.5, 201)
    alt = stationary_R_closed(n, gamma, omega, om, tau, "alternating")
    shifted_phase = om * tau + math.pi
    dl, gt = lamb_shift_and_decay(n, gamma, shifted_phase / tau, tau)
    uni = gt ** 2 / ((om - omega - dl) ** 2 + gt ** 2)
    np.testing.assert_allclose(alt, uni, rtol=1e-12)
    lay = uniform_layout(n, tau, "alternating", omega, gamma)
    np.testing.assert_allclose(alt, stationary_R(lay, om), rtol=1e-8)


def test_lamb_shift_limits():
    dl, gt = lamb_shift_and_decay(7, 0.01, TWO_PI, 1.0)
    assert dl == pytest.approx(0.0, abs=1e-15)
    assert gt == pytest.approx(49 * 0.01 / 2)
    dl, gt = lamb_shift_and_decay(1, 0.2, 3.3, 1.0)
    assert (dl, gt) == pytest.approx((0.0, 0.1))


def test_resonant_array_reflects_fully():
    for gamma in (0.001, 0.05):
        assert stationary_R_closed(20, gamma, TWO_PI, TWO_PI, 1.0) == pytest.approx(1.0)


def test_spectrum_fields():
    lay = uniform_layout(3, 1.0, "uniform", 2.0, 0.02)
    spec = scatter_spectrum(lay, [1.9, 2.0, 2.1])
    dl, gt = lamb_shift_and_decay(3, 0.02, np.array([1.9, 2.0, 2.1]), 1.0)
    np.testing.assert_allclose(spec.delta_L, dl, atol=1e-14)
    np.testing.assert_allclose(spec.gamma_eff, gt, atol=1e-14)


def test_response_vanishes_without_coupling_or_probe():
    lay0 = uniform_layout(2, 1.0, "uniform", 1.0, 0.0)
    assert np.all(zeta_of_t(lay0, 1.0, t=[0.0, 5.0]) == 0)
    lay = uniform_layout(1, 1.0, "uniform", 1.0, 0.1)
    assert np.all(zeta_of_t(lay, 1.0, f=0.0, t=[0.0, 5.0]) == 0)


def test_causality_before_arrival():
    lay = uniform_layout(3, 1.0, "uniform", 2.0, 0.02)
    t = np.array([-2.0, -0.5, -1e-9])
    np.testing.assert_array_equal(reflection_t(lay, 2.0, t=t), 0.0)


def test_response_matches_driven_delay_equation():
    lay = uniform_layout(3, 1.0, "uniform", TWO_PI, 0.02)
    om = 0.95 * TWO_PI
    traj = integrate_beta(lay, drive=ProbeTone(om), t_end=60.0, beta0=0.0, dt=1 / 400)
    t = np.linspace(0.1, 60.0, 300)
    np.testing.assert_allclose(zeta_of_t(lay, om, t=t), traj.beta_at(t), atol=2e-6)


def test_response_is_linear_in_amplitude():
    lay = uniform_layout(2, 1.0, "uniform", 3.0, 0.05)
    t = np.linspace(0, 20, 7)
    z1 = zeta_of_t(lay, 3.1, 1.0, t=t)
    z2 = zeta_of_t(lay, 3.1, 0.3 - 0.2j, t=t)
    np.testing.assert_allclose(z2, (0.3 - 0.2j) * z1, atol=1e-15)
    np.testing.assert_allclose(reflection_t(lay, 3.1, 0.3, t), reflection_t(lay, 3.1, 1.0, t))


def test_long_time_limits():
    lay = uniform_layout(5, 1.0, "uniform", TWO_PI, 0.02)
    om = 0.9 * TWO_PI
    t_long = 3000.0
    r = reflection_t(lay, om, t=t_long)
    tr = transmission_t(lay, om, t=t_long)
    assert r == pytest.approx(stationary_R(lay, om), abs=1e-6)
    assert r + tr == pytest.approx(1.0, abs=1e-6)


def test_transient_can_exceed_unity():
    lay = uniform_layout(5, 1.0, "uniform", TWO_PI, 0.02)
    t = np.linspace(0, 40, 801)
    total = reflection_t(lay, TWO_PI, t=t) + transmission_t(lay, TWO_PI, t=t)
    assert total.max() > 1.0 + 1e-3


@pytest.mark.parametrize("n,value", [(2, 4.0), (20, 6 / 1.05), (10 ** 6, 6.0)])
def test_threshold_values(n, value):
    assert non_markovian_threshold(n) == pytest.approx(value, rel=1e-5)


def test_threshold_needs_two_legs():
    with pytest.raises(InvalidConfigurationError):
        non_markovian_threshold(1)


def test_weak_coupling_has_only_the_trivial_peak():
    np.testing.assert_allclose(side_peaks(20, 1e-6, 1.0, TWO_PI), [TWO_PI])
    assert len(nonzero_side_peaks(20, 1e-6, 1.0, TWO_PI)) == 0


@pytest.mark.parametrize("n", [2, 5, 20])
def test_side_peaks_appear_at_threshold(n):
    thr = non_markovian_threshold(n)
    gamma_of = lambda f: f * thr / (n * n * (n - 1))  # noqa: E731
    assert len(nonzero_side_peaks(n, gamma_of(0.98), 1.0, TWO_PI)) == 0
    peaks = nonzero_side_peaks(n, gamma_of(1.02), 1.0, TWO_PI)
    assert len(peaks) == 2
    assert peaks[0] - TWO_PI == pytest.approx(-(peaks[1] - TWO_PI), rel=1e-8)
    lay = uniform_layout(n, 1.0, "uniform", TWO_PI, gamma_of(1.02))
    np.testing.assert_allclose(stationary_R(lay, peaks), 1.0, atol=1e-8)


def test_side_peaks_off_the_symmetric_phase_are_resonances():
    n, gamma, omega = 8, 0.03, 5.0
    peaks = side_peaks(n, gamma, 1.0, omega)
    assert len(peaks) >= 1
    lay = uniform_layout(n, 1.0, "uniform", omega, gamma)
    np.testing.assert_allclose(stationary_R(lay, peaks), 1.0, atol=1e-8)
