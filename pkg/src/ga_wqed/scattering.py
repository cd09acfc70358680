"""Linear-response scattering of a weak probe tone off a giant atom.

A probe of frequency ``omega_d`` arrives from the left and reaches leg ``m``
at ``tau_m = x_m - x_1``.  The atom response per unit probe amplitude,
``zeta(t)``, follows from the same poles as the free decay.  Reflection is
read just left of the first leg and transmission just right of the last.

Notation: ``S = sum_m w_m exp(i omega_d tau_m)`` and
``D = F(-i omega_d) = -i Delta + gamma/2 sum_d W_d exp(i omega_d d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidConfigurationError
from .kernel import build_delay_table
from .laplace import PoleSet, find_poles, stationary_denominator, wide_window
from .model import SIGN_PATTERNS, AtomLayout

SERIES_SWITCH = 1e-8


@dataclass
class ScatterSpectrum:
    """Stationary coefficients and the effective level parameters on a drive grid."""

    omega_d: np.ndarray
    R_inf: np.ndarray
    T_inf: np.ndarray
    delta_L: np.ndarray
    gamma_eff: np.ndarray


@dataclass
class ResponseRecord:
    """Time-resolved linear response and the resulting R(t), T(t)."""

    t: np.ndarray
    zeta: np.ndarray
    R_t: np.ndarray
    T_t: np.ndarray


@lru_cache(maxsize=64)
def _cached_poles(layout: AtomLayout, n_branches: int) -> PoleSet:
    return find_poles(layout, wide_window(layout, n_branches))


def response_poles(layout: AtomLayout, n_branches: int = 400) -> PoleSet:
    """Pole set used for the transient part of the response (cached per layout)."""
    return _cached_poles(layout, n_branches)


def _array_factor(layout: AtomLayout, omega_d):
    """``S(omega_d) = sum_m w_m exp(i omega_d tau_m)``."""
    om = np.asarray(omega_d, dtype=float)
    return np.exp(1j * np.multiply.outer(om, layout.arrival_times())) @ layout.w


def zeta_of_t(layout: AtomLayout, omega_d: float, f: complex = 1.0,
              poles: PoleSet | None = None, t=0.0):
    """Atom response to a probe of amplitude ``f``: stationary part plus pole transient.

    Each leg ``m`` contributes only after the probe reaches it
    (``t >= tau_m``).  Broadcasts over ``t``.
    """
    t = np.asarray(t, dtype=float)
    if layout.gamma_single == 0.0 or f == 0:
        return np.zeros(t.shape, dtype=complex)
    poles = poles if poles is not None else response_poles(layout)
    d_stat = complex(stationary_denominator(layout, omega_d))
    sp = poles.s
    weights = poles.residues / (sp + 1j * omega_d)
    out = np.zeros(t.shape, dtype=complex)
    for tau_m, w_m in zip(layout.arrival_times(), layout.w):
        if w_m == 0.0:
            continue
        u = t - tau_m
        on = u >= 0
        if not np.any(on):
            continue
        uu = u[on]
        trans = np.exp(np.multiply.outer(uu, sp)) @ weights
        out[on] += 0.5 * w_m * (np.exp(-1j * omega_d * uu) / d_stat + trans)
    return f * out


def _zeta_hat(layout, omega_d, poles, t):
    return zeta_of_t(layout, omega_d, 1.0, poles, t)


def reflection_t(layout: AtomLayout, omega_d: float, f: complex = 1.0, t=0.0,
                 poles: PoleSet | None = None):
    """``R(t) = gamma**2 |sum_m w_m zeta(t - tau_m)|**2`` per unit probe intensity.

    Independent of ``f`` (the response is linear).
    """
    t = np.asarray(t, dtype=float)
    if layout.gamma_single == 0.0:
        return np.zeros(t.shape)
    poles = poles if poles is not None else response_poles(layout)
    acc = np.zeros(t.shape, dtype=complex)
    for tau_m, w_m in zip(layout.arrival_times(), layout.w):
        acc += w_m * _zeta_hat(layout, omega_d, poles, t - tau_m)
    return layout.gamma_single ** 2 * np.abs(acc) ** 2


def transmission_t(layout: AtomLayout, omega_d: float, f: complex = 1.0, t=0.0,
                   poles: PoleSet | None = None):
    """``T(t) = |exp(-i omega_d (t - tau_N)) - gamma sum_m w_m zeta(t - tau_N + tau_m)|**2``."""
    t = np.asarray(t, dtype=float)
    tau = layout.arrival_times()
    tau_n = tau[-1]
    probe = np.exp(-1j * omega_d * (t - tau_n))
    if layout.gamma_single == 0.0:
        return np.abs(probe) ** 2
    poles = poles if poles is not None else response_poles(layout)
    acc = np.zeros(t.shape, dtype=complex)
    for tau_m, w_m in zip(tau, layout.w):
        acc += w_m * _zeta_hat(layout, omega_d, poles, t - tau_n + tau_m)
    return np.abs(probe - layout.gamma_single * acc) ** 2


def response_record(layout: AtomLayout, omega_d: float, t, f: complex = 1.0,
                    poles: PoleSet | None = None) -> ResponseRecord:
    t = np.asarray(t, dtype=float)
    poles = poles if poles is not None else (
        response_poles(layout) if layout.gamma_single > 0 else None)
    return ResponseRecord(t, zeta_of_t(layout, omega_d, f, poles, t),
                          reflection_t(layout, omega_d, f, t, poles),
                          transmission_t(layout, omega_d, f, t, poles))


def stationary_R(layout: AtomLayout, omega_d):
    """Long-time reflection ``(gamma/2)**2 |S|**4 / |D|**2`` for any layout."""
    s2 = np.abs(_array_factor(layout, omega_d)) ** 2
    d = stationary_denominator(layout, omega_d)
    return (0.5 * layout.gamma_single) ** 2 * s2 ** 2 / np.abs(d) ** 2


def stationary_T(layout: AtomLayout, omega_d):
    """Long-time transmission ``|1 - (gamma/2)|S|**2 / D|**2`` for any layout."""
    s2 = np.abs(_array_factor(layout, omega_d)) ** 2
    d = stationary_denominator(layout, omega_d)
    return np.abs(1.0 - 0.5 * layout.gamma_single * s2 / d) ** 2


def _phase(omega_d, tau, pattern):
    if pattern not in SIGN_PATTERNS:
        raise InvalidConfigurationError(f"unknown sign pattern {pattern!r}")
    phi = np.asarray(omega_d, dtype=float) * tau
    return phi + math.pi if pattern == "alternating" else phi


def _interference_sums(n_legs: int, phi):
    """``(1 - cos N phi)/(1 - cos phi)`` and ``(N sin phi - sin N phi)/(1 - cos phi)``.

    Near ``phi = 2 pi j`` the leading series terms ``N**2`` and
    ``(N**3 - N) eps / 3`` are used.
    """
    phi = np.asarray(phi, dtype=float)
    eps = np.remainder(phi + math.pi, 2 * math.pi) - math.pi
    near = (1.0 - np.cos(phi)) < SERIES_SWITCH
    n = float(n_legs)
    with np.errstate(divide="ignore", invalid="ignore"):
        den = 1.0 - np.cos(phi)
        a = (1.0 - np.cos(n * phi)) / den
        b = (n * np.sin(phi) - np.sin(n * phi)) / den
    a = np.where(near, n * n * (1.0 - (n * n - 1.0) * eps ** 2 / 12.0), a)
    b = np.where(near, (n ** 3 - n) * eps / 3.0, b)
    return a, b


def lamb_shift_and_decay(n_legs: int, gamma: float, omega_d, tau: float,
                         pattern: str = "uniform"):
    """Lamb shift ``Delta_L`` and effective decay ``gamma~`` of ``N`` equally spaced legs."""
    a, b = _interference_sums(n_legs, _phase(omega_d, tau, pattern))
    if np.ndim(a) == 0:
        return float(0.5 * gamma * b), float(0.5 * gamma * a)
    return 0.5 * gamma * b, 0.5 * gamma * a


def stationary_R_closed(n_legs: int, gamma: float, omega: float, omega_d, tau: float,
                        pattern: str = "uniform"):
    """Lorentzian form ``gamma~**2 / ((Delta - Delta_L)**2 + gamma~**2)`` for equal legs."""
    dl, ge = lamb_shift_and_decay(n_legs, gamma, omega_d, tau, pattern)
    delta = np.asarray(omega_d, dtype=float) - omega
    with np.errstate(invalid="ignore"):
        r = ge ** 2 / ((delta - dl) ** 2 + ge ** 2)
    return np.where(ge == 0.0, 0.0, r) if np.ndim(r) else (0.0 if ge == 0.0 else float(r))


def scatter_spectrum(layout: AtomLayout, omega_d) -> ScatterSpectrum:
    """Stationary R, T and the effective level shift/width for any layout."""
    om = np.asarray(omega_d, dtype=float)
    table = build_delay_table(layout)
    ksum = 0.5 * layout.gamma_single * (np.exp(1j * np.multiply.outer(om, table.delays))
                                        @ table.weight_sums)
    return ScatterSpectrum(om, stationary_R(layout, om), stationary_T(layout, om),
                           ksum.imag, ksum.real)


def non_markovian_threshold(n_legs: int) -> float:
    """Critical ``gamma_tot * T`` above which side full-reflection peaks exist (phase 2 pi)."""
    if int(n_legs) != n_legs or n_legs < 2:
        raise InvalidConfigurationError("the criterion needs at least two legs")
    return 6.0 / (1.0 + 1.0 / n_legs)


def side_peaks(n_legs: int, gamma: float, tau: float, omega: float,
               pattern: str = "uniform", xtol: float | None = None) -> np.ndarray:
    """Drive frequencies where the shifted level is resonant, ``omega_d = Omega + Delta_L``.

    Roots of ``g(Delta) = Delta - Delta_L(Omega + Delta)`` are bracketed by
    sign changes on a uniform grid of spacing at most ``pi / (100 N tau)``
    and refined with Brent's method.  When ``Omega tau`` is a multiple of
    ``2 pi`` (uniform pattern) ``g`` is odd: only ``Delta > 0`` is scanned,
    starting just above 0 so that roots born at the origin are caught, and
    the result is mirrored.  The trivial root ``Delta = 0`` is included
    whenever it exists, so a single entry means "Markovian".
    """
    if gamma < 0:
        raise InvalidConfigurationError("gamma must be >= 0")
    scale = max(abs(omega), 1.0)
    xtol = xtol if xtol is not None else 1e-10 * scale

    def g(delta):
        dl, _ = lamb_shift_and_decay(n_legs, gamma, omega + delta, tau, pattern)
        return delta - dl

    reach = 0.5 * gamma * n_legs * n_legs * 1.01 + 10 * xtol
    h_max = math.pi / (100.0 * n_legs * tau)
    n_pts = max(2, int(math.ceil(reach / h_max)) + 1)
    phase = omega * tau + (math.pi if pattern == "alternating" else 0.0)
    odd = abs(math.remainder(phase, 2 * math.pi)) < 1e-12

    def scan(lo, hi):
        xs = np.linspace(lo, hi, n_pts)
        vals = np.asarray(g(xs), dtype=float)
        roots = []
        for x0, x1, v0, v1 in zip(xs[:-1], xs[1:], vals[:-1], vals[1:]):
            if v0 == 0.0:
                roots.append(x0)
            elif v0 * v1 < 0:
                roots.append(brentq(g, x0, x1, xtol=xtol, rtol=4 * np.finfo(float).eps))
        if vals[-1] == 0.0:
            roots.append(xs[-1])
        return roots

    if gamma == 0.0:
        return np.array([omega])
    if odd:
        start = min(1e-9 * scale, h_max * 1e-3)
        pos = [r for r in scan(start, reach) if r > 0]
        deltas = sorted([-r for r in pos] + [0.0] + pos)
    else:
        deltas = sorted(scan(-reach, reach))
        merged = []
        for d in deltas:
            if not merged or abs(d - merged[-1]) > 10 * xtol:
                merged.append(d)
        deltas = merged
    return omega + np.asarray(deltas, dtype=float)


def nonzero_side_peaks(n_legs, gamma, tau, omega, pattern="uniform") -> np.ndarray:
    """:func:`side_peaks` without the trivial resonance at ``omega_d = Omega``."""
    roots = side_peaks(n_legs, gamma, tau, omega, pattern)
    return roots[np.abs(roots - omega) > 1e-9 * max(abs(omega), 1.0)]
