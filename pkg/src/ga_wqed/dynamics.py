"""Time-domain integration of the delayed atom equation and field reconstruction.

The atom amplitude obeys

    beta'(t) = -i Omega beta - gamma/2 sum_d W_d beta(t - d) Theta(t - d) + drive(t)

with ``W_d`` from :class:`~ga_wqed.kernel.DelayTable`.  Integration runs in a
frame rotating at ``frame_frequency`` so the step is set by the decay rate
and the delays instead of the carrier.  Emission and re-absorption are
gated by the instantaneous coupling scale at their own times.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Protocol, Sequence

import numpy as np
from scipy.integrate import simpson

from ._rk4 import integrate_rk4
from .errors import HistoryRangeError, InvalidConfigurationError, StepSizeError
from .kernel import build_delay_table
from .model import AtomLayout, ControlSchedule, total_decay_and_span

ALIGN_RTOL = 1e-9


class FreeField(Protocol):
    """Anything that can evaluate an incident free field ``phi_0(x, t)``."""

    def field(self, x, t) -> np.ndarray: ...


@dataclass(frozen=True)
class ProbeTone:
    """Weak plane wave incident from the left, switched on as it reaches each leg.

    Adds ``strength/2 * sum_m w_m exp(-i omega_d (t - tau_m)) Theta(t - tau_m)``
    to the atom equation, ``tau_m`` being the travel time from the first leg.
    With ``strength=1`` the amplitude is the normalised linear response.
    """

    omega_d: float
    strength: complex = 1.0

    kind = "probe"


@dataclass(frozen=True)
class PacketDrive:
    """Incident free field; adds ``-i sqrt(gamma/2) sum_m w_m phi_0(x_m, t)``."""

    packet: Any

    kind = "packet"


@dataclass
class Trajectory:
    """Uniformly sampled atom amplitude with the derivatives needed to interpolate it.

    ``samples`` are stored in the rotating frame; :meth:`beta_at` and
    :attr:`beta` return lab-frame values.
    """

    t0: float
    dt: float
    samples: np.ndarray
    deriv_right: np.ndarray
    deriv_left: np.ndarray
    frame_frequency: float
    schedule: ControlSchedule
    drive: Any = None
    meta: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.samples) - 1

    @property
    def t_end(self) -> float:
        return self.t0 + self.n_steps * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.samples))

    @property
    def beta(self) -> np.ndarray:
        return self.samples * np.exp(-1j * self.frame_frequency * self.times)

    def beta_at(self, t) -> np.ndarray:
        """Lab-frame amplitude at arbitrary times; zero before ``t0``."""
        t = np.asarray(t, dtype=float)
        if np.any(t > self.t_end + 1e-9 * max(1.0, abs(self.t_end))):
            raise HistoryRangeError(
                f"requested time {float(np.max(t))} beyond trajectory end {self.t_end}")
        u = (t - self.t0) / self.dt
        i = np.floor(u).astype(np.int64)
        i = np.clip(i, 0, self.n_steps - 1)
        th = u - i
        y0 = self.samples[i]
        y1 = self.samples[i + 1]
        f0 = self.deriv_right[i] * self.dt
        f1 = self.deriv_left[i] * self.dt
        th2 = th * th
        th3 = th2 * th
        val = ((2 * th3 - 3 * th2 + 1) * y0 + (th3 - 2 * th2 + th) * f0
               + (-2 * th3 + 3 * th2) * y1 + (th3 - th2) * f1)
        val = np.where(u < 0, 0.0, val)
        return val * np.exp(-1j * self.frame_frequency * t)


@dataclass
class FieldSnapshot:
    """Complex field ``phi(x, t)`` on a uniform grid at one instant."""

    x_grid: np.ndarray
    phi: np.ndarray
    t: float

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.phi) ** 2

    def excitation_in(self, a: float, b: float) -> float:
        return excitation_in_window(self, a, b)


def _validate_dt_limit(layout: AtomLayout, schedule: ControlSchedule, drive,
                       frame: float) -> float:
    table = build_delay_table(layout)
    limits = []
    tau_min = table.min_positive_delay
    if tau_min is not None:
        limits.append(tau_min / 20.0)
    gamma_tot, _ = total_decay_and_span(layout)
    if gamma_tot > 0:
        limits.append(0.02 / gamma_tot)
    resid = max(abs((layout.omega if w is None else w) - frame) for w in schedule.omega)
    if isinstance(drive, ProbeTone):
        resid = max(resid, abs(drive.omega_d - frame))
    elif isinstance(drive, PacketDrive) and hasattr(drive.packet, "k0"):
        resid = max(resid, abs(drive.packet.k0 - frame))
    if resid > 0:
        limits.append(2 * math.pi / (40.0 * resid))
    return min(limits) if limits else math.inf


def _is_multiple(values: np.ndarray, h: float) -> bool:
    if len(values) == 0:
        return True
    q = values / h
    return bool(np.all(np.abs(q - np.round(q)) <= ALIGN_RTOL * np.maximum(q, 1.0)))


def select_step(layout: AtomLayout, schedule: ControlSchedule, t_end: float,
                drive=None, frame_frequency: float | None = None,
                dt: float | None = None, max_subdivisions: int = 200000) -> float:
    """Choose (or validate) a step that divides every delay.

    The step never exceeds ``min(tau_min/20, 0.02/gamma_tot, 2 pi/(40 |Omega - frame|))``.
    A user-supplied ``dt`` above that limit raises :class:`StepSizeError`.
    """
    frame = layout.omega if frame_frequency is None else frame_frequency
    limit = _validate_dt_limit(layout, schedule, drive, frame)
    table = build_delay_table(layout)
    delays = table.delays[table.delays > 0]
    if dt is not None:
        if dt <= 0:
            raise StepSizeError("dt must be positive")
        if dt > limit * (1 + 1e-12):
            raise StepSizeError(f"dt={dt} exceeds the stability/accuracy limit {limit}")
        if not _is_multiple(delays, dt):
            raise StepSizeError(f"dt={dt} does not divide every delay")
        return float(dt)
    if not math.isfinite(limit):
        limit = max(t_end, 1.0) / 100.0
    if len(delays) == 0:
        return min(limit, t_end / 16.0) if t_end > 0 else limit
    base = float(delays[0])
    m0 = max(1, math.ceil(base / limit - 1e-12))
    for m in range(m0, m0 + max_subdivisions):
        h = base / m
        if _is_multiple(delays, h):
            return h
    raise InvalidConfigurationError(
        "leg delays are not commensurate on any step grid; pass dt explicitly")


def _align_schedule(schedule: ControlSchedule, dt: float) -> tuple[ControlSchedule, float]:
    """Subdivide the step (or, failing that, snap switches) so switches land on grid points."""
    st = np.asarray(schedule.switch_times)
    if len(st) == 0 or _is_multiple(np.abs(st[st != 0]), dt):
        return schedule, dt
    for sub in range(2, 65):
        if _is_multiple(np.abs(st[st != 0]), dt / sub):
            warnings.warn(f"step subdivided by {sub} to align schedule switches", stacklevel=3)
            return schedule, dt / sub
    snapped = tuple(float(np.round(t / dt) * dt) for t in st)
    warnings.warn("schedule switches snapped to the step grid", stacklevel=3)
    return ControlSchedule(snapped, schedule.omega, schedule.coupling), dt


def _drive_values(layout: AtomLayout, drive, t: np.ndarray, left: bool) -> np.ndarray:
    if drive is None:
        return np.zeros(len(t), dtype=complex)
    w = layout.w
    if isinstance(drive, ProbeTone):
        tau_m = layout.arrival_times()
        dtm = t[:, None] - tau_m[None, :]
        on = dtm > 0 if left else dtm >= 0
        terms = w[None, :] * np.exp(-1j * drive.omega_d * dtm) * on
        return 0.5 * drive.strength * terms.sum(axis=1)
    if isinstance(drive, PacketDrive):
        acc = np.zeros(len(t), dtype=complex)
        for xm, wm in zip(layout.positions, w):
            if wm != 0.0:
                acc += wm * drive.packet.field(np.full(len(t), xm), t)
        return -1j * math.sqrt(layout.gamma_single / 2.0) * acc
    raise InvalidConfigurationError(f"unsupported drive {drive!r}")


def integrate_delay_equation(omega: float, kernel: Sequence[tuple[float, complex]],
                             t_end: float, dt: float, beta0: complex = 1.0,
                             schedule: ControlSchedule | None = None,
                             drive_fn=None, frame_frequency: float | None = None,
                             layout_for_meta: AtomLayout | None = None) -> Trajectory:
    """Integrate ``beta' = -i Omega beta - sum_d r_d beta(t - d) + drive`` from 0 to ``t_end``.

    ``kernel`` lists ``(delay, rate)`` pairs; every delay must be an integer
    multiple of ``dt``.  ``drive_fn(t, left)`` returns the (ungated, lab-frame)
    drive on an array of times.
    """
    schedule = schedule or ControlSchedule.always_on()
    frame = omega if frame_frequency is None else frame_frequency
    n_steps = int(round(t_end / dt))
    if n_steps < 1:
        raise InvalidConfigurationError("t_end must cover at least one step")
    if abs(n_steps * dt - t_end) > 1e-9 * max(t_end, 1.0):
        n_steps = int(math.ceil(t_end / dt - 1e-9))
    k_idx = []
    coef = []
    for d, r in kernel:
        k = int(round(d / dt))
        if abs(k * dt - d) > ALIGN_RTOL * max(d, dt):
            raise StepSizeError(f"delay {d} is not a multiple of dt={dt}")
        k_idx.append(k)
        coef.append(complex(r) * np.exp(1j * frame * d))
    grid = dt * np.arange(n_steps + 1)
    mids = grid[:-1] + 0.5 * dt
    seg_t = mids
    gate = np.sqrt(np.asarray(schedule.coupling_on(seg_t), dtype=float))
    det = np.asarray(schedule.omega_of_t(seg_t, omega), dtype=float) - frame
    if drive_fn is None:
        d0 = dmid = d1 = np.zeros(n_steps, dtype=complex)
    else:
        rot_grid = np.exp(1j * frame * grid)
        right = drive_fn(grid[:-1], False) * rot_grid[:-1]
        left = drive_fn(grid[1:], True) * rot_grid[1:]
        dmid = drive_fn(mids, False) * np.exp(1j * frame * mids)
        d0, dmid, d1 = right * gate, dmid * gate, left * gate
    y, fr, fl = integrate_rk4(complex(beta0), n_steps, float(dt), det.astype(np.float64),
                              gate.astype(np.float64), np.asarray(k_idx, dtype=np.int64),
                              np.asarray(coef, dtype=np.complex128),
                              np.ascontiguousarray(d0, dtype=np.complex128),
                              np.ascontiguousarray(dmid, dtype=np.complex128),
                              np.ascontiguousarray(d1, dtype=np.complex128))
    if not np.all(np.isfinite(y)):
        raise StepSizeError("integration produced non-finite values")
    meta = {"n_steps": n_steps}
    if layout_for_meta is not None:
        meta["layout"] = layout_for_meta.to_dict()
    return Trajectory(0.0, float(dt), y, fr, fl, float(frame), schedule, None, meta)


def integrate_beta(layout: AtomLayout, schedule: ControlSchedule | None = None,
                   drive=None, t_end: float = 1.0, dt: float | None = None,
                   beta0: complex = 1.0,
                   frame_frequency: float | None = None) -> Trajectory:
    """Fixed-step RK4 solution of the delayed atom equation for ``layout``.

    ``drive`` is ``None``, a :class:`ProbeTone` or a :class:`PacketDrive`.
    ``dt`` is chosen automatically when omitted (see :func:`select_step`).
    """
    schedule = schedule or ControlSchedule.always_on()
    frame = layout.omega if frame_frequency is None else frame_frequency
    dt = select_step(layout, schedule, t_end, drive, frame, dt)
    schedule, dt = _align_schedule(schedule, dt)
    table = build_delay_table(layout)
    kernel = [(d, 0.5 * layout.gamma_single * wsum) for d, wsum in table if wsum != 0.0]
    drive_fn = None if drive is None else (lambda t, left: _drive_values(layout, drive, t, left))
    traj = integrate_delay_equation(layout.omega, kernel, t_end, dt, beta0, schedule,
                                    drive_fn, frame, layout)
    traj.drive = drive
    return traj


def field_snapshot(layout: AtomLayout, trajectory: Trajectory, x_grid,
                   t: float, free_field: FreeField | None = None,
                   schedule: ControlSchedule | None = None) -> FieldSnapshot:
    """Retarded field ``phi_0(x,t) - i sqrt(gamma/2) sum_m w_m g(t_e) beta(t_e)``.

    ``t_e = t - |x - x_m|`` is the emission time; ``g`` is the square root of
    the coupling scale at that time.
    """
    schedule = schedule or trajectory.schedule
    x = np.asarray(x_grid, dtype=float)
    if t > trajectory.t_end + 1e-9 * max(1.0, trajectory.t_end):
        raise HistoryRangeError(f"snapshot time {t} beyond trajectory end {trajectory.t_end}")
    phi = np.zeros(x.shape, dtype=complex)
    if free_field is not None:
        phi += free_field.field(x, np.full(x.shape, float(t)))
    if layout.gamma_single > 0:
        amp = math.sqrt(layout.gamma_single / 2.0)
        for xm, wm in zip(layout.positions, layout.weights):
            if wm == 0.0:
                continue
            te = t - np.abs(x - xm)
            inside = te >= 0
            if not np.any(inside):
                continue
            vals = np.zeros(x.shape, dtype=complex)
            tt = te[inside]
            g = np.sqrt(np.asarray(schedule.coupling_on(tt), dtype=float))
            vals[inside] = g * trajectory.beta_at(tt)
            phi += -1j * amp * wm * vals
    return FieldSnapshot(x, phi, float(t))


def excitation_in_window(snapshot: FieldSnapshot, a: float, b: float) -> float:
    """Simpson integral of ``|phi|**2`` over the grid points inside ``[a, b]``."""
    x = snapshot.x_grid
    h = x[1] - x[0] if len(x) > 1 else 0.0
    tol = 1e-9 * max(1.0, abs(h))
    if a < x[0] - tol - abs(h) or b > x[-1] + tol + abs(h):
        raise HistoryRangeError(f"window [{a}, {b}] outside the grid [{x[0]}, {x[-1]}]")
    mask = (x >= a - tol) & (x <= b + tol)
    if mask.sum() < 2:
        return 0.0
    return float(simpson(snapshot.density[mask], x=x[mask]))


def uniform_grid(a: float, b: float, max_spacing: float) -> np.ndarray:
    """Uniform grid on ``[a, b]`` with an even number of intervals."""
    n = max(2, int(math.ceil((b - a) / max_spacing)))
    n += n % 2
    return np.linspace(a, b, n + 1)
