import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad, simpson

from ga_wqed.darkstate import (
    DarkMode,
    bound_profile,
    bound_total,
    dark_amplitude,
    dark_condition,
    double_dark_params,
    feasible_pairs,
    sample_bound_profile,
    stationary_profile,
)
from ga_wqed.dynamics import field_snapshot, integrate_beta, uniform_grid
from ga_wqed.errors import InfeasiblePairError, InvalidConfigurationError, InvalidModeError
from ga_wqed.laplace import find_poles
from ga_wqed.model import total_decay_and_span


def test_condition_examples():
    assert dark_condition(2, 1, 0.3) == pytest.approx(math.pi)
    assert dark_condition(4, 1, 0.1) == pytest.approx(math.pi / 2 - 0.2)
    assert dark_condition(5, 3, 0.0) == pytest.approx(6 * math.pi / 5)


def test_amplitude_examples():
    assert dark_amplitude(2, 1, 0.1) == pytest.approx(1 / 1.1)
    assert dark_amplitude(4, 2, 0.05) == pytest.approx(2 / 2.2)
    assert dark_amplitude(6, 1, 0.0) == 1.0


def test_total_examples():
    assert bound_total(2, 1, 0.1) == pytest.approx(0.1 / 1.21)
    assert bound_total(5, 2, 1e-12) == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("n_legs,n,pattern", [(3, 0, "uniform"), (4, 4, "uniform"),
                                              (4, 2, "alternating"), (3, 1, "alternating"),
                                              (1, 1, "uniform")])
def test_singular_modes_rejected(n_legs, n, pattern):
    with pytest.raises(InvalidModeError):
        dark_condition(n_legs, n, 0.1, pattern)


def test_unknown_pattern_rejected():
    with pytest.raises(InvalidConfigurationError):
        dark_amplitude(4, 1, 0.1, "staggered")


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.data(), st.floats(0.001, 0.5))
def test_condition_makes_the_mode_pole_imaginary(n_legs, data, gt):
    n = data.draw(st.integers(1, n_legs - 1))
    mode = DarkMode(n_legs, n, gt)
    lay = mode.layout(1.0)
    s = -1j * mode.theta
    k = np.arange(n_legs)
    f = s + 1j * lay.omega + 0.5 * gt * np.sum(np.exp(-s * np.abs(k[:, None] - k[None, :])))
    assert abs(f) < 1e-12 * max(1.0, lay.omega)
    assert 0 < mode.amplitude <= 1


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([2, 4, 6, 8]), st.data(), st.floats(0.001, 0.5))
def test_alternating_condition_makes_the_mode_pole_imaginary(n_legs, data, gt):
    n = data.draw(st.integers(0, n_legs - 1).filter(lambda m: 2 * m != n_legs))
    mode = DarkMode(n_legs, n, gt, "alternating")
    lay = mode.layout(1.0)
    s = -1j * mode.theta
    k = np.arange(n_legs)
    w = (-1.0) ** (k + 1)
    f = s + 1j * lay.omega + 0.5 * gt * (w @ np.exp(-s * np.abs(k[:, None] - k[None, :])) @ w)
    assert abs(f) < 1e-12 * max(1.0, abs(lay.omega))


@pytest.mark.parametrize("n_legs,n,pattern", [(2, 1, "uniform"), (4, 1, "uniform"),
                                              (5, 2, "uniform"), (4, 1, "alternating")])
def test_pole_search_finds_the_dark_pole(n_legs, n, pattern):
    mode = DarkMode(n_legs, n, 0.1, pattern)
    lay = mode.layout(1.0)
    poles = find_poles(lay)
    dark = poles.dark_poles
    assert len(dark) == 1
    assert dark[0] == pytest.approx(-1j * mode.theta, abs=1e-8 * abs(lay.omega))
    res = poles.residues[poles.is_dark][0]
    assert abs(res) == pytest.approx(mode.amplitude, rel=1e-8)


@pytest.mark.parametrize("n_legs,n", [(2, 1), (3, 1), (4, 3), (6, 2)])
def test_delay_equation_settles_on_the_amplitude(n_legs, n):
    mode = DarkMode(n_legs, n, 0.1)
    lay = mode.layout(1.0)
    gamma_tot, _ = total_decay_and_span(lay)
    traj = integrate_beta(lay, t_end=60 / gamma_tot)
    assert abs(traj.beta[-1]) ** 2 == pytest.approx(mode.amplitude ** 2, abs=1e-3)


@pytest.mark.parametrize("n_legs,n", [(2, 1), (4, 1), (5, 3), (7, 2)])
def test_profile_vanishes_at_the_ends_and_outside(n_legs, n):
    p = bound_profile(n_legs, n, 0.2, 1.0, [-0.5, 0.0, n_legs - 1.0, n_legs + 0.5])
    np.testing.assert_allclose(p, 0.0, atol=1e-15)


@pytest.mark.parametrize("n_legs,n", [(3, 1), (5, 2), (6, 5)])
def test_profile_is_continuous_across_segments(n_legs, n):
    for m in range(1, n_legs - 1):
        left = bound_profile(n_legs, n, 0.2, 1.0, m - 1e-13)
        right = bound_profile(n_legs, n, 0.2, 1.0, m)
        assert abs(left - right) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.data(), st.floats(0.01, 0.5), st.floats(0.3, 3.0))
def test_profile_matches_retarded_field(n_legs, data, gamma, tau):
    n = data.draw(st.integers(1, n_legs - 1))
    mode = DarkMode(n_legs, n, gamma * tau)
    x = np.linspace(-0.2 * tau, (n_legs - 0.8) * tau, 97)
    closed = bound_profile(n_legs, n, gamma, tau, x)
    general = stationary_profile(mode.layout(tau), mode.mode_frequency(tau), mode.amplitude, x)
    inside = (x >= 0) & (x <= (n_legs - 1) * tau)
    np.testing.assert_allclose(closed[inside], general[inside], atol=1e-12)
    np.testing.assert_allclose(general[~inside], 0.0, atol=1e-12)


@pytest.mark.parametrize("n_legs,n", [(2, 1), (3, 2), (5, 1), (6, 4)])
def test_total_matches_quadrature(n_legs, n):
    gamma = 0.15
    num = sum(quad(lambda x: float(bound_profile(n_legs, n, gamma, 1.0, x)), m, m + 1)[0]
              for m in range(n_legs - 1))
    assert num == pytest.approx(bound_total(n_legs, n, gamma), rel=1e-9)
    prof = sample_bound_profile(n_legs, n, gamma, 1.0)
    assert simpson(prof.density, x=prof.x) == pytest.approx(prof.total, rel=5e-3)


def test_alternating_trapped_field_from_the_delay_equation():
    mode = DarkMode(4, 1, 0.2, "alternating")
    lay = mode.layout(1.0)
    t = 400.0
    traj = integrate_beta(lay, t_end=t)
    x = uniform_grid(0.0, 3.0, 0.01)
    snap = field_snapshot(lay, traj, x, t)
    steady = stationary_profile(lay, mode.mode_frequency(1.0), mode.amplitude, x)
    np.testing.assert_allclose(snap.density, steady, atol=1e-4)


def test_double_dark_pair():
    dd = double_dark_params(5, 4, 6)
    assert dd.omega_tau == pytest.approx(2 * math.pi)
    for m in dd.modes:
        assert dark_condition(5, m.n, dd.gamma_tau) == pytest.approx(dd.omega_tau, abs=1e-12)
    assert dd.beat_period(1.0) == pytest.approx(2.5)


@pytest.mark.parametrize("pair", [(2, 6), (3, 7), (4, 8)])
def test_double_dark_conditions_agree(pair):
    dd = double_dark_params(5, *pair)
    assert dd.gamma_tau > 0 and dd.omega_tau > 0
    a, b = (dark_condition(5, n, dd.gamma_tau) for n in pair)
    assert a == pytest.approx(dd.omega_tau, abs=1e-12)
    assert b == pytest.approx(dd.omega_tau, abs=1e-12)


def test_beat_terms_cancel():
    dd = double_dark_params(5, 4, 6)
    t = np.linspace(0, 10, 41)
    total = dd.atom_excitation(t) + dd.field_excitation(t)
    np.testing.assert_allclose(total, total[0], atol=1e-14)


@pytest.mark.parametrize("pair", [(1, 2), (2, 3), (3, 3), (1, 6)])
def test_infeasible_pairs(pair):
    with pytest.raises(InfeasiblePairError):
        double_dark_params(5, *pair)


def test_feasible_pair_list():
    assert feasible_pairs(5, 8) == [(2, 6), (3, 6), (3, 7), (4, 6), (4, 7), (4, 8)]
