"""Dark states of equally spaced giant atoms and the photon bound states they support.

A dark mode is a purely imaginary pole ``s = -i theta / tau`` with
``theta = 2 n pi / N``.  Given ``N`` and ``gamma tau`` the atom frequency
that produces it is fixed in closed form; the atom then keeps the amplitude
``A(n)`` forever while a standing field wave stays trapped between the
outermost legs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasiblePairError, InvalidConfigurationError, InvalidModeError
from .model import SIGN_PATTERNS, AtomLayout, uniform_layout

TRIG_TOL = 1e-12


def _check(n_legs, n, pattern):
    if pattern not in SIGN_PATTERNS:
        raise InvalidConfigurationError(f"unknown sign pattern {pattern!r}")
    if int(n_legs) != n_legs or n_legs < 2:
        raise InvalidModeError("dark modes need at least two legs")
    if int(n) != n:
        raise InvalidModeError(f"mode index must be an integer, got {n}")
    x = n * math.pi / n_legs
    if pattern == "uniform":
        if abs(math.sin(x)) < TRIG_TOL:
            raise InvalidModeError(f"sin(n pi / N) = 0 for n={n}, N={n_legs}: no dark mode")
    else:
        if n_legs % 2:
            raise InvalidModeError("alternating signs give dark modes of this form only for even N")
        if abs(math.cos(x)) < TRIG_TOL:
            raise InvalidModeError(f"cos(n pi / N) = 0 for n={n}, N={n_legs}: no dark mode")


def dark_condition(n_legs: int, n: int, gamma_tau: float, pattern: str = "uniform") -> float:
    """Phase ``Omega tau`` at which the pole ``-i 2 n pi / (N tau)`` lies on the imaginary axis.

    Uniform signs: ``2 n pi / N - (N gamma tau / 2) cot(n pi / N)``.
    Alternating signs (even ``N``): ``2 n pi / N + (N gamma tau / 2) tan(n pi / N)``.
    """
    _check(n_legs, n, pattern)
    x = n * math.pi / n_legs
    if pattern == "uniform":
        return 2 * x - 0.5 * n_legs * gamma_tau / math.tan(x)
    return 2 * x + 0.5 * n_legs * gamma_tau * math.tan(x)


def dark_amplitude(n_legs: int, n: int, gamma_tau: float, pattern: str = "uniform") -> float:
    """Long-time atom amplitude ``A(n)`` (the residue of the dark pole)."""
    _check(n_legs, n, pattern)
    x = n * math.pi / n_legs
    trig2 = math.sin(x) ** 2 if pattern == "uniform" else math.cos(x) ** 2
    return 2 * trig2 / (2 * trig2 + n_legs * gamma_tau)


@dataclass(frozen=True)
class DarkMode:
    """One dark mode of an ``N``-leg atom with leg spacing ``tau``."""

    n_legs: int
    n: int
    gamma_tau: float
    pattern: str = "uniform"

    @property
    def omega_tau(self) -> float:
        return dark_condition(self.n_legs, self.n, self.gamma_tau, self.pattern)

    @property
    def theta(self) -> float:
        """Phase per leg spacing, ``2 n pi / N``."""
        return 2 * self.n * math.pi / self.n_legs

    def mode_frequency(self, tau: float) -> float:
        return self.theta / tau

    @property
    def amplitude(self) -> float:
        return dark_amplitude(self.n_legs, self.n, self.gamma_tau, self.pattern)

    def layout(self, tau: float = 1.0) -> AtomLayout:
        """Layout realizing this mode (``Omega`` from the dark condition)."""
        return uniform_layout(self.n_legs, tau, self.pattern, self.omega_tau / tau,
                              self.gamma_tau / tau)


def bound_profile(n_legs: int, n: int, gamma: float, tau: float, x):
    """Stationary trapped field density ``p_n(x)`` for equal, same-sign legs at ``(m-1) tau``.

    With ``x = (m' - 1) tau + lambda tau`` (``lambda`` in [0, 1)) the density is
    ``8 gamma sin^2(n pi/N) sin^2(n pi m'/N) sin^2(n pi (m' + 2 lambda - 1)/N) /
    (2 sin^2(n pi/N) + N gamma tau)^2`` and zero outside ``[0, (N-1) tau]``.
    """
    _check(n_legs, n, "uniform")
    x = np.asarray(x, dtype=float)
    u = x / tau
    inside = (u >= 0) & (u <= n_legs - 1)
    m_prime = np.clip(np.floor(u), 0, n_legs - 1) + 1
    lam = u - (m_prime - 1)
    q = n * math.pi / n_legs
    s2 = math.sin(q) ** 2
    p = (8 * gamma * s2 * np.sin(q * m_prime) ** 2 * np.sin(q * (m_prime + 2 * lam - 1)) ** 2
         / (2 * s2 + n_legs * gamma * tau) ** 2)
    return np.where(inside, p, 0.0)


def stationary_profile(layout: AtomLayout, mode_frequency: float, amplitude: complex, x):
    """Trapped density from the retarded field formula for a steady ``beta = A exp(-i w t)``.

    ``(gamma/2) |A|^2 |sum_m w_m exp(i w |x - x_m|)|^2``; valid for any signs,
    so it also covers the alternating pattern.
    """
    x = np.asarray(x, dtype=float)
    phase = np.exp(1j * mode_frequency * np.abs(np.subtract.outer(x, layout.x)))
    amp = phase @ layout.w
    return 0.5 * layout.gamma_single * abs(amplitude) ** 2 * np.abs(amp) ** 2


def bound_total(n_legs: int, n: int, gamma_tau: float) -> float:
    """Total trapped field excitation ``I(n)`` for equal, same-sign legs."""
    _check(n_legs, n, "uniform")
    q = n * math.pi / n_legs
    s2 = math.sin(q) ** 2
    return (2 * n_legs * gamma_tau * s2 / (2 * s2 + n_legs * gamma_tau) ** 2
            * (1 + n_legs / (4 * n * math.pi) * math.sin(2 * q)))


@dataclass(frozen=True)
class BoundProfile:
    """Sampled ``p_n`` on ``[0, (N - 1) tau]`` with its closed-form total."""

    x: np.ndarray
    density: np.ndarray
    total: float


def sample_bound_profile(n_legs: int, n: int, gamma: float, tau: float,
                         points_per_segment: int = 400) -> BoundProfile:
    x = np.linspace(0.0, (n_legs - 1) * tau, (n_legs - 1) * points_per_segment + 1)
    return BoundProfile(x, bound_profile(n_legs, n, gamma, tau, x),
                        bound_total(n_legs, n, gamma * tau))


@dataclass(frozen=True)
class DoubleDark:
    """Two dark modes sharing one ``(Omega tau, gamma tau)`` setting."""

    n_legs: int
    n1: int
    n2: int
    omega_tau: float
    gamma_tau: float

    @property
    def modes(self) -> tuple[DarkMode, DarkMode]:
        return (DarkMode(self.n_legs, self.n1, self.gamma_tau),
                DarkMode(self.n_legs, self.n2, self.gamma_tau))

    def beat_frequency(self, tau: float = 1.0) -> float:
        return 2 * math.pi * (self.n2 - self.n1) / (self.n_legs * tau)

    def beat_period(self, tau: float = 1.0) -> float:
        return 2 * math.pi / abs(self.beat_frequency(tau))

    def atom_excitation(self, t, tau: float = 1.0):
        """Predicted ``|beta|^2 = A1^2 + A2^2 + 2 A1 A2 cos(beat t)`` at long times."""
        a1, a2 = (m.amplitude for m in self.modes)
        return a1 ** 2 + a2 ** 2 + 2 * a1 * a2 * np.cos(self.beat_frequency(tau) * np.asarray(t))

    def field_excitation(self, t, tau: float = 1.0):
        """Predicted trapped field ``I1 + I2 - 2 A1 A2 cos(beat t)`` at long times."""
        a1, a2 = (m.amplitude for m in self.modes)
        i1 = bound_total(self.n_legs, self.n1, self.gamma_tau)
        i2 = bound_total(self.n_legs, self.n2, self.gamma_tau)
        return i1 + i2 - 2 * a1 * a2 * np.cos(self.beat_frequency(tau) * np.asarray(t))

    def layout(self, tau: float = 1.0) -> AtomLayout:
        return uniform_layout(self.n_legs, tau, "uniform", self.omega_tau / tau,
                              self.gamma_tau / tau)


def double_dark_params(n_legs: int, n1: int, n2: int) -> DoubleDark:
    """``(Omega tau, gamma tau)`` at which modes ``n1`` and ``n2`` are dark together.

    Equating the two dark conditions gives
    ``gamma tau = 4 (n1 - n2) pi / (N^2 (cot q1 - cot q2))`` with
    ``q = n pi / N``; both results must be positive.  Positive ``gamma tau``
    requires the two indices to sit in different periods of the cotangent,
    e.g. ``(4, 6)`` for ``N = 5``.
    """
    if n1 == n2:
        raise InfeasiblePairError("the two mode indices must differ")
    _check(n_legs, n1, "uniform")
    _check(n_legs, n2, "uniform")
    c1 = 1.0 / math.tan(n1 * math.pi / n_legs)
    c2 = 1.0 / math.tan(n2 * math.pi / n_legs)
    if abs(c1 - c2) < TRIG_TOL:
        raise InfeasiblePairError("equal cotangents: the pair never shares a dark setting")
    gamma_tau = 4 * (n1 - n2) * math.pi / (n_legs ** 2 * (c1 - c2))
    omega_tau = 2 * n1 * math.pi / n_legs - 2 * (n1 - n2) * math.pi / n_legs * c1 / (c1 - c2)
    if not gamma_tau > 0:
        raise InfeasiblePairError(f"pair ({n1}, {n2}) needs gamma tau = {gamma_tau:.6g} <= 0")
    if not omega_tau > 0:
        raise InfeasiblePairError(f"pair ({n1}, {n2}) needs Omega tau = {omega_tau:.6g} <= 0")
    return DoubleDark(int(n_legs), int(n1), int(n2), omega_tau, gamma_tau)


def feasible_pairs(n_legs: int, n_max: int) -> list[tuple[int, int]]:
    """All ``(n1, n2)`` with ``1 <= n1 < n2 <= n_max`` admitting a double-dark setting."""
    out = []
    for n1 in range(1, n_max + 1):
        for n2 in range(n1 + 1, n_max + 1):
            try:
                double_dark_params(n_legs, n1, n2)
            except InvalidConfigurationError:
                continue
            out.append((n1, n2))
    return out
