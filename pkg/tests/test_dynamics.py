import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ga_wqed.dynamics import (
    PacketDrive,
    excitation_in_window,
    field_snapshot,
    integrate_beta,
    integrate_delay_equation,
    select_step,
    uniform_grid,
)
from ga_wqed.errors import HistoryRangeError, StepSizeError
from ga_wqed.model import ControlSchedule, uniform_layout
from ga_wqed.protocol import PacketSpec


def test_point_atom_decays_exponentially():
    lay = uniform_layout(1, 1.0, "uniform", 2.0, 0.1)
    traj = integrate_beta(lay, t_end=40.0)
    t = traj.times
    np.testing.assert_allclose(traj.beta, np.exp((-2j - 0.05) * t), atol=1e-9)


def test_halving_the_step_converges_at_fourth_order():
    lay = uniform_layout(3, 1.0, "uniform", 2.5, 0.05)
    ref = integrate_beta(lay, t_end=30.0, dt=1 / 320).beta_at(30.0)
    errs = [abs(integrate_beta(lay, t_end=30.0, dt=h).beta_at(30.0) - ref) for h in (1 / 25, 1 / 50)]
    assert errs[1] < errs[0] / 10


def test_step_choice_divides_delays():
    lay = uniform_layout(3, 0.7, "uniform", 1.0, 0.05)
    h = select_step(lay, ControlSchedule.always_on(), 10.0)
    assert h <= 0.7 / 20
    assert abs(0.7 / h - round(0.7 / h)) < 1e-9


@pytest.mark.parametrize("dt", [0.2, 0.03, -0.01])
def test_bad_steps_rejected(dt):
    lay = uniform_layout(2, 1.0, "uniform", 1.0, 0.05)
    with pytest.raises(StepSizeError):
        integrate_beta(lay, t_end=5.0, dt=dt)


def test_delay_table_must_sit_on_grid():
    with pytest.raises(StepSizeError):
        integrate_delay_equation(1.0, [(0.0, 0.05), (0.33, 0.05)], 5.0, 0.1)


def test_history_range():
    lay = uniform_layout(2, 1.0, "uniform", 1.0, 0.05)
    traj = integrate_beta(lay, t_end=5.0)
    with pytest.raises(HistoryRangeError):
        traj.beta_at(6.0)
    with pytest.raises(HistoryRangeError):
        field_snapshot(lay, traj, [0.0, 1.0], 7.0)
    assert traj.beta_at(-1.0) == 0


def test_interpolation_is_accurate_between_steps():
    lay = uniform_layout(1, 1.0, "uniform", 1.0, 0.1)
    traj = integrate_beta(lay, t_end=10.0, dt=0.05)
    t = np.linspace(0.01, 9.99, 337)
    np.testing.assert_allclose(traj.beta_at(t), np.exp((-1j - 0.05) * t), atol=1e-6)


def test_switched_off_atom_keeps_its_state():
    lay = uniform_layout(2, 1.0, "uniform", 3.0, 0.1)
    sched = ControlSchedule.switched(t_on=0.0, t_off=4.0)
    traj = integrate_beta(lay, schedule=sched, t_end=12.0, dt=1 / 40)
    b = np.abs(traj.beta_at(np.array([6.0, 9.0, 12.0])))
    np.testing.assert_allclose(b, abs(traj.beta_at(4.0)), rtol=1e-12)
    assert abs(traj.beta_at(4.0)) < 1.0


def test_never_coupled_atom_only_rotates():
    lay = uniform_layout(2, 1.0, "uniform", 3.0, 0.1)
    sched = ControlSchedule.switched(t_on=100.0)
    traj = integrate_beta(lay, schedule=sched, t_end=10.0)
    np.testing.assert_allclose(traj.beta, np.exp(-3j * traj.times), atol=1e-12)


def test_misaligned_switch_is_handled_with_a_warning():
    lay = uniform_layout(2, 1.0, "uniform", 3.0, 0.1)
    sched = ControlSchedule.switched(t_on=0.0, t_off=2.0 + 1 / 80)
    with pytest.warns(UserWarning):
        traj = integrate_beta(lay, schedule=sched, t_end=5.0, dt=1 / 40)
    assert traj.dt == pytest.approx(1 / 80)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 5), st.sampled_from(["uniform", "alternating"]),
       st.floats(0.5, 8.0), st.floats(0.0, 0.2))
def test_excitation_never_grows(n, pattern, ot, gt):
    lay = uniform_layout(n, 1.0, pattern, ot, gt)
    traj = integrate_beta(lay, t_end=15.0)
    mag = np.abs(traj.beta)
    assert mag.max() <= 1.0 + 1e-9


@pytest.mark.parametrize("n", [1, 3])
def test_emitted_plus_atom_is_conserved(n):
    # bright phase so that the field has left the atom by the end; the fine
    # grid keeps the quadrature error at the emission wavefronts small
    lay = uniform_layout(n, 1.0, "uniform", 2 * math.pi, 0.05)
    t = 40.0
    traj = integrate_beta(lay, t_end=t, dt=1 / 200)
    x = uniform_grid(-t - 1, n - 1 + t + 1, 0.0005)
    snap = field_snapshot(lay, traj, x, t)
    total = abs(traj.beta_at(t)) ** 2 + excitation_in_window(snap, x[0], x[-1])
    assert total == pytest.approx(1.0, abs=2e-4)


def test_window_outside_grid_rejected():
    lay = uniform_layout(1, 1.0, "uniform", 2.0, 0.05)
    traj = integrate_beta(lay, t_end=2.0)
    snap = field_snapshot(lay, traj, np.linspace(0, 1, 11), 1.0)
    with pytest.raises(HistoryRangeError):
        excitation_in_window(snap, -5.0, 1.0)


def test_uniform_grid_has_even_intervals():
    g = uniform_grid(0.0, 1.0, 0.3)
    assert (len(g) - 1) % 2 == 0 and np.diff(g).max() <= 0.3


def test_packet_drive_without_coupling_passes_through():
    lay = uniform_layout(2, 1.0, "uniform", 5.0, 0.0)
    packet = PacketSpec(5.0, 0.5, -10.0)
    traj = integrate_beta(lay, drive=PacketDrive(packet), t_end=20.0, beta0=0.0)
    assert np.max(np.abs(traj.beta)) == 0.0
    snap = field_snapshot(lay, traj, uniform_grid(-10, 30, 0.01), 20.0, free_field=packet)
    assert snap.excitation_in(-10, 30) == pytest.approx(1.0, abs=1e-6)
