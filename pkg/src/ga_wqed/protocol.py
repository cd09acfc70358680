"""Catching and releasing a propagating wave packet with a two-leg giant atom.

The atom is decoupled while the packet travels in, coupled at ``t_on`` with
``Omega tau / pi`` an odd integer (resonant with the packet and dark), and
optionally decoupled again at ``t_release``.  The catch probability ``P`` is
the atom excitation plus the field excitation between the legs, averaged
over one round-trip period ``x2 - x1`` centred on the measurement time.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from .dynamics import (
    FieldSnapshot,
    PacketDrive,
    Trajectory,
    field_snapshot,
    integrate_beta,
    select_step,
    uniform_grid,
)
from .errors import InvalidConfigurationError
from .model import AtomLayout, ControlSchedule

DEFAULT_GAMMA_RATIO = 0.1
DEFAULT_MEASURE_SPANS = 40.0
LAUNCH_WIDTHS = 8.0
AVERAGE_SAMPLES = 16


@dataclass(frozen=True)
class PacketSpec:
    """Gaussian single-excitation packet ``(2 sigma^2/pi)^(1/4) exp(-sigma^2 u^2 + i k0 u)``.

    ``u = x - x0 - t`` for a right mover (``direction=+1``) and
    ``u = -(x - x0 + t)`` for a left mover, so both branches carry positive
    frequency ``k0``.  With ``mirror`` set, a second branch starts at
    ``2 mirror - x0`` and travels the other way; the two-branch state is
    renormalised to unit excitation.
    """

    k0: float
    sigma_k: float
    x0: float
    direction: int = 1
    mirror: float | None = None

    def __post_init__(self):
        if not self.k0 > 0 or not self.sigma_k > 0:
            raise InvalidConfigurationError("k0 and sigma_k must be positive")
        if self.direction not in (1, -1):
            raise InvalidConfigurationError("direction must be +1 or -1")

    @classmethod
    def from_width(cls, dx_over_lambda0: float, k0: float = 1.0, center: float = 0.0,
                   direction: int = 1, mirror: float | None = None) -> "PacketSpec":
        lam = 2 * math.pi / k0
        return cls(k0, 1.0 / (2 * dx_over_lambda0 * lam), center, direction, mirror)

    @property
    def delta_x(self) -> float:
        return 1.0 / (2 * self.sigma_k)

    @property
    def wavelength(self) -> float:
        return 2 * math.pi / self.k0

    @property
    def n_branches(self) -> int:
        return 1 if self.mirror is None else 2

    def _branch(self, x, t, x0, direction):
        u = direction * (x - x0) - t
        pref = (2 * self.sigma_k ** 2 / math.pi) ** 0.25
        return pref * np.exp(-self.sigma_k ** 2 * u ** 2 + 1j * self.k0 * u)

    def branch_overlap(self) -> float:
        """``<branch 1 | branch 2>``; real and tiny for well separated packets."""
        if self.mirror is None:
            return 0.0
        sep = 2 * (self.mirror - self.x0)
        return math.exp(-0.5 * self.sigma_k ** 2 * sep ** 2
                        - 0.5 * self.k0 ** 2 / self.sigma_k ** 2)

    def field(self, x, t):
        x = np.asarray(x, dtype=float)
        t = np.asarray(t, dtype=float)
        out = self._branch(x, t, self.x0, self.direction)
        if self.mirror is None:
            return out
        out = out + self._branch(x, t, 2 * self.mirror - self.x0, -self.direction)
        return out / math.sqrt(2 + 2 * self.branch_overlap())

    def centers(self, t: float) -> tuple[float, ...]:
        c = self.x0 + self.direction * t
        if self.mirror is None:
            return (c,)
        return (c, 2 * self.mirror - c)


def free_packet(spec: PacketSpec, x, t):
    """Free-space field of ``spec`` at ``(x, t)``."""
    return spec.field(x, t)


def optimal_phase(dx_over_lambda0: float) -> int:
    """Odd ``Omega tau / pi`` for the best catch: ``2 round(4 dx / lambda0) + 1``."""
    if not dx_over_lambda0 > 0:
        raise InvalidConfigurationError("packet width must be positive")
    return 2 * int(round(4 * dx_over_lambda0)) + 1


def catch_layout(n_phase: int, k0: float = 1.0,
                 gamma_ratio: float = DEFAULT_GAMMA_RATIO) -> AtomLayout:
    """Two equal legs at ``0`` and ``n_phase pi / k0`` with ``Omega = k0``."""
    _check_phase(n_phase)
    tau = n_phase * math.pi / k0
    return AtomLayout(k0, gamma_ratio * k0, (0.0, tau), (1.0, 1.0))


def _check_phase(n_phase):
    if int(n_phase) != n_phase or n_phase < 1:
        raise InvalidConfigurationError(f"Omega tau / pi must be a positive integer, got {n_phase}")
    if n_phase % 2 == 0:
        raise InvalidConfigurationError(
            f"Omega tau / pi = {n_phase} is even: the two-leg dark condition needs it odd")


def _check_layout(layout: AtomLayout):
    if layout.n_legs != 2:
        raise InvalidConfigurationError("the catch protocol uses a two-leg atom")
    phase = layout.omega * layout.span / math.pi
    if abs(phase - round(phase)) > 1e-9 * max(1.0, phase):
        raise InvalidConfigurationError(f"Omega tau / pi = {phase:.12g} is not an integer")
    _check_phase(int(round(phase)))


def catch_packet(layout: AtomLayout, dx_over_lambda0: float, packets: int = 1) -> PacketSpec:
    """Packet(s) launched ``8 dx`` from the leg midpoint, resonant with the atom."""
    if packets not in (1, 2):
        raise InvalidConfigurationError("packets must be 1 or 2")
    k0 = layout.omega
    mid = 0.5 * (layout.positions[0] + layout.positions[-1])
    dx = dx_over_lambda0 * 2 * math.pi / k0
    return PacketSpec.from_width(dx_over_lambda0, k0, mid - LAUNCH_WIDTHS * dx, 1,
                                 mid if packets == 2 else None)


@dataclass
class CatchResult:
    """Outcome of one catch run."""

    P: float
    beta_trace: Trajectory
    layout: AtomLayout
    packet: PacketSpec
    snapshots: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    @property
    def flagged(self) -> bool:
        return bool(self.diagnostics.get("flagged", False))


def _default_t_on(layout: AtomLayout, packet: PacketSpec) -> float:
    mid = 0.5 * (layout.positions[0] + layout.positions[-1])
    return abs(mid - packet.x0)


def _snap(t, dt):
    return float(round(t / dt) * dt)


def _window_grid(layout: AtomLayout, packet: PacketSpec, a: float, b: float) -> np.ndarray:
    return uniform_grid(a, b, min(packet.wavelength / 16.0, (b - a) / 16.0))


def trapped_excitation(layout: AtomLayout, trajectory: Trajectory, packet: PacketSpec,
                       t: float, window: tuple[float, float] | None = None) -> float:
    """``|beta(t)|^2`` plus field excitation strictly between the legs at time ``t``."""
    a, b = window or (layout.positions[0], layout.positions[-1])
    grid = _window_grid(layout, packet, a, b)
    snap = field_snapshot(layout, trajectory, grid, t, free_field=packet)
    return float(abs(trajectory.beta_at(t)) ** 2) + snap.excitation_in(a, b)


def run_catch(layout: AtomLayout, packet: PacketSpec, t_on: float | None = None,
              t_measure: float | None = None, window: tuple[float, float] | None = None,
              t_release: float | None = None, t_end: float | None = None,
              snapshot_times=(), dt: float | None = None,
              switch_on: bool = True) -> CatchResult:
    """Integrate the catch protocol and evaluate ``P``.

    ``t_on`` defaults to the moment the packet centre reaches the leg
    midpoint; ``t_measure`` to ``t_on + 40 (x2 - x1)``.  ``P`` averages the
    trapped excitation over ``[t_measure - span/2, t_measure + span/2]``.
    A measurement before the packet tails and the reflected and transmitted
    parts can have left the window is flagged with a warning.
    ``switch_on=False`` leaves the atom decoupled throughout.
    """
    _check_layout(layout)
    span = layout.span
    if t_on is None:
        t_on = _default_t_on(layout, packet)
    if t_measure is None:
        t_measure = t_on + DEFAULT_MEASURE_SPANS * span
    if t_measure <= t_on:
        raise InvalidConfigurationError("t_measure must come after t_on")
    if t_release is not None and t_release <= t_measure + 0.5 * span:
        raise InvalidConfigurationError("t_release must come after the averaging window")
    last = t_measure + 0.5 * span
    if t_end is None:
        t_end = last if t_release is None else t_release + 2 * span
    t_end = max(t_end, last, max(snapshot_times, default=0.0))

    drive = PacketDrive(packet)
    probe = ControlSchedule.switched(t_on=t_on, t_off=t_release, omega_on=layout.omega)
    dt = select_step(layout, probe, t_end, drive, layout.omega, dt)
    t_on = _snap(t_on, dt)
    if t_release is not None:
        t_release = _snap(t_release, dt)
    if switch_on:
        schedule = ControlSchedule.switched(t_on=t_on, t_off=t_release, omega_on=layout.omega)
    else:
        schedule = ControlSchedule((), (layout.omega,), (0.0,))
    traj = integrate_beta(layout, schedule, drive, t_end=t_end, dt=dt, beta0=0.0)

    clear_after = 2 * span + 2 * LAUNCH_WIDTHS * packet.delta_x
    flagged = t_measure - 0.5 * span - t_on < clear_after
    if flagged:
        warnings.warn(f"t_measure={t_measure:g} is before transients clear "
                      f"(needs t_on + {clear_after:g}); P is unreliable", stacklevel=2)

    samples = t_measure + span * (np.arange(AVERAGE_SAMPLES) + 0.5 - AVERAGE_SAMPLES / 2) \
        / AVERAGE_SAMPLES
    trapped = np.array([trapped_excitation(layout, traj, packet, float(t), window)
                        for t in samples])
    snaps = {float(t): full_snapshot(layout, traj, packet, float(t)) for t in snapshot_times}
    diag = {"t_on": t_on, "t_measure": t_measure, "t_release": t_release,
            "window": window or (layout.positions[0], layout.positions[-1]),
            "dt": dt, "trapped_min": float(trapped.min()), "trapped_max": float(trapped.max()),
            "flagged": bool(flagged), "n_phase": int(round(layout.omega * span / math.pi)),
            "dx_over_lambda0": packet.delta_x / packet.wavelength,
            "packets": packet.n_branches}
    return CatchResult(float(np.mean(trapped)), traj, layout, packet, snaps, diag)


def full_snapshot(layout: AtomLayout, trajectory: Trajectory, packet: PacketSpec,
                  t: float, margin: float | None = None) -> FieldSnapshot:
    """Field on a grid covering the legs plus ``margin`` on each side."""
    if margin is None:
        margin = layout.span
    a = layout.positions[0] - margin
    b = layout.positions[-1] + margin
    grid = uniform_grid(a, b, packet.wavelength / 16.0)
    return field_snapshot(layout, trajectory, grid, t, free_field=packet)


@dataclass
class ReleaseResult:
    """Field after the atom is decoupled again."""

    snapshots: list
    released_left: float
    released_right: float
    atom_retained: float
    trapped_at_release: float
    window_after: float
    shape_overlap: float


def run_release(catch: CatchResult, t_release: float, t_end: float | None = None,
                n_snapshots: int = 4) -> ReleaseResult:
    """Decouple the atom at ``t_release`` and follow the field as it leaves.

    Re-runs the catch with the extra switch (the solution up to
    ``t_release`` is unchanged).  The released parts are the excitation in
    ``[x1 - L, x1]`` and ``[x2, x2 + L]`` at ``t_end`` with
    ``L = t_end - t_release``; ``t_end`` defaults to ``t_release + 2 span``.
    ``shape_overlap`` compares the right-going released envelope with the
    incident Gaussian envelope (1 means identical shapes).
    """
    layout, packet = catch.layout, catch.packet
    span = layout.span
    if t_end is None:
        t_end = t_release + 2 * span
    if t_end < t_release + span:
        raise InvalidConfigurationError("t_end must leave at least one span for the field to exit")
    d = catch.diagnostics
    rerun = run_catch(layout, packet, t_on=d["t_on"], t_measure=d["t_measure"],
                      window=d["window"], t_release=t_release, t_end=t_end, dt=d["dt"])
    traj = rerun.beta_trace
    t_rel = rerun.diagnostics["t_release"]
    x1, x2 = layout.positions[0], layout.positions[-1]
    length = t_end - t_rel
    trapped = trapped_excitation(layout, traj, packet, t_rel)
    snap_end = field_snapshot(layout, traj,
                              uniform_grid(x1 - length, x2 + length, packet.wavelength / 16.0),
                              t_end, free_field=packet)
    left = snap_end.excitation_in(x1 - length, x1)
    right = snap_end.excitation_in(x2, x2 + length)
    inside = snap_end.excitation_in(x1, x2)
    atom = float(abs(traj.beta_at(t_end)) ** 2)

    mask = (snap_end.x_grid >= x2) & (snap_end.x_grid <= x2 + length)
    xs = snap_end.x_grid[mask]
    env = np.abs(snap_end.phi[mask])
    centre = np.sum(xs * env ** 2) / max(np.sum(env ** 2), 1e-300)
    gauss = np.exp(-packet.sigma_k ** 2 * (xs - centre) ** 2)
    overlap = float(np.sum(env * gauss) ** 2 / (np.sum(env ** 2) * np.sum(gauss ** 2) + 1e-300))

    times = np.linspace(t_rel, t_end, n_snapshots)
    snaps = [full_snapshot(layout, traj, packet, float(t)) for t in times]
    return ReleaseResult(snaps, left, right, atom, trapped, inside, overlap)


@dataclass
class LoopResult:
    """Two-packet catch and release on a loop, with snapshots at four epochs."""

    catch: CatchResult
    release: ReleaseResult
    epochs: dict
    spacetime: tuple


LOOP_EPOCHS = {"separated": 41.0, "overlapped": 82.0, "trapped": 256.0, "released": 491.5}


def loop_scenario(dx_over_lambda0: float = 5.0, k0: float = 1.0,
                  gamma_ratio: float = DEFAULT_GAMMA_RATIO,
                  epochs_over_pi: dict | None = None, t_release_over_pi: float = 450.0,
                  spacetime_shape: tuple[int, int] = (200, 400)) -> LoopResult:
    """Loop geometry modelled as the symmetric two-packet catch.

    The splitter turns one unit packet into two half-norm counter-propagating
    packets that meet midway between the legs.  The leg spacing follows the
    optimal phase for ``dx_over_lambda0``; the launch is placed so the packets
    meet at ``t = 2 span``.  Epochs and the release time are given in units of
    ``pi / Omega``.
    """
    epochs_over_pi = dict(LOOP_EPOCHS if epochs_over_pi is None else epochs_over_pi)
    n_phase = optimal_phase(dx_over_lambda0)
    layout = catch_layout(n_phase, k0, gamma_ratio)
    span = layout.span
    mid = 0.5 * span
    dx = dx_over_lambda0 * 2 * math.pi / k0
    packet = PacketSpec.from_width(dx_over_lambda0, k0, mid - 2 * span, 1, mid)
    unit = math.pi / layout.omega
    t_release = t_release_over_pi * unit
    t_on = 2 * span
    t_measure = min(t_release - 0.6 * span, t_on + DEFAULT_MEASURE_SPANS * span)
    t_end = max(max(epochs_over_pi.values()) * unit, t_release + 2 * span)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        catch = run_catch(layout, packet, t_on=t_on, t_measure=t_measure,
                          t_release=t_release, t_end=t_end,
                          snapshot_times=[v * unit for v in epochs_over_pi.values()])
        release = run_release(catch, t_release, t_end)
    epochs = {name: catch.snapshots[float(v * unit)] for name, v in epochs_over_pi.items()}
    nt, nx = spacetime_shape
    ts = np.linspace(0.0, t_end, nt)
    xs = np.linspace(-span - 3 * dx, 2 * span + 3 * dx, nx)
    dens = np.array([np.abs(field_snapshot(layout, catch.beta_trace, xs, float(t),
                                           free_field=packet).phi) ** 2 for t in ts])
    return LoopResult(catch, release, epochs, (ts, xs, dens))


def count_antinodes(snapshot: FieldSnapshot, a: float, b: float, rel_height: float = 0.5) -> int:
    """Number of local maxima of ``|phi|^2`` in ``(a, b)`` above ``rel_height * max``."""
    mask = (snapshot.x_grid > a) & (snapshot.x_grid < b)
    d = snapshot.density[mask]
    if len(d) < 3:
        return 0
    peak = (d[1:-1] > d[:-2]) & (d[1:-1] >= d[2:]) & (d[1:-1] > rel_height * d.max())
    return int(np.count_nonzero(peak))


def dark_projection(layout: AtomLayout, packet: PacketSpec, t_on: float | None = None,
                    points_per_wavelength: int = 32) -> float:
    """Long-time trapped probability: overlap of the state at ``t_on`` with the dark mode.

    The dark eigenstate has atom amplitude 1 and field
    ``-i sqrt(gamma/2) sum_m exp(i Omega |x - x_m|)`` between the legs; the
    atom is empty before ``t_on``, so only the field overlap enters.
    """
    _check_layout(layout)
    if t_on is None:
        t_on = _default_t_on(layout, packet)
    x1, x2 = layout.positions[0], layout.positions[-1]
    n = int(math.ceil((x2 - x1) / packet.wavelength * points_per_wavelength))
    x = np.linspace(x1, x2, 2 * (n // 2) + 1)
    amp = math.sqrt(layout.gamma_single / 2)
    mode = -1j * amp * (np.exp(1j * layout.omega * np.abs(x - x1))
                        + np.exp(1j * layout.omega * np.abs(x - x2)))
    norm = 1.0 + simpson(np.abs(mode) ** 2, x=x)
    ov = simpson(np.conj(mode) * packet.field(x, np.full(x.shape, t_on)), x=x)
    return float(abs(ov) ** 2 / norm)


@dataclass(frozen=True)
class PowerLawFit:
    """``limit - P = C x^(-alpha)`` fitted by least squares in log-log space."""

    alpha: float
    C: float
    limit: float
    residual: float


def fit_power_law(x, P, limit: float) -> PowerLawFit:
    x = np.asarray(x, dtype=float)
    gap = limit - np.asarray(P, dtype=float)
    if np.any(gap <= 0):
        raise InvalidConfigurationError("every P must lie below the limit for a log fit")
    A = np.column_stack([np.ones_like(x), np.log(x)])
    coef, res, *_ = np.linalg.lstsq(A, np.log(gap), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - np.log(gap)) ** 2)))
    return PowerLawFit(float(-coef[1]), float(math.exp(coef[0])), limit, resid)


def catch_point(dx_over_lambda0: float, packets: int = 1, n_phase: int | None = None,
                k0: float = 1.0, gamma_ratio: float = DEFAULT_GAMMA_RATIO,
                t_measure_spans: float = DEFAULT_MEASURE_SPANS) -> CatchResult:
    """One point of a catch sweep with the default launch and timing policy."""
    if n_phase is None:
        n_phase = optimal_phase(dx_over_lambda0)
    layout = catch_layout(n_phase, k0, gamma_ratio)
    packet = catch_packet(layout, dx_over_lambda0, packets)
    t_on = _default_t_on(layout, packet)
    return run_catch(layout, packet, t_on=t_on, t_measure=t_on + t_measure_spans * layout.span)
