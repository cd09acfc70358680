"""Physical configuration of a multi-point (giant) atom on a 1D waveguide.

Natural units are used throughout: the propagation velocity is 1 and
hbar is 1, so a delay between two legs equals their separation.  Frequencies
are measured in units of a user-chosen reference ``Omega_0`` and lengths in
units of ``lambda_0 = 2 pi / Omega_0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .errors import InvalidConfigurationError

SIGN_PATTERNS = ("uniform", "alternating")


@dataclass(frozen=True)
class AtomLayout:
    """Leg positions, signed coupling weights and the bare atom frequency.

    The physical coupling of leg ``m`` is ``w_m * c_0`` and ``gamma_single``
    is the relaxation rate ``2 Gamma c_0**2`` of a single leg with unit
    weight, so the rate attached to a pair of legs is
    ``gamma_single * w_m * w_m'``.
    """

    omega: float
    gamma_single: float
    positions: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        pos = tuple(float(x) for x in self.positions)
        wts = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "gamma_single", float(self.gamma_single))
        if len(pos) == 0:
            raise InvalidConfigurationError("layout needs at least one leg")
        if len(pos) != len(wts):
            raise InvalidConfigurationError(
                f"{len(pos)} positions but {len(wts)} weights")
        if not all(math.isfinite(x) for x in pos):
            raise InvalidConfigurationError("positions must be finite")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise InvalidConfigurationError("positions must be strictly increasing")
        if not all(math.isfinite(w) for w in wts):
            raise InvalidConfigurationError("weights must be finite")
        if not any(w != 0.0 for w in wts):
            raise InvalidConfigurationError("at least one weight must be nonzero")
        if not (math.isfinite(self.gamma_single) and self.gamma_single >= 0.0):
            raise InvalidConfigurationError("gamma_single must be finite and >= 0")
        if not math.isfinite(self.omega):
            raise InvalidConfigurationError("omega must be finite")

    @property
    def n_legs(self) -> int:
        return len(self.positions)

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.positions, dtype=float)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    @property
    def span(self) -> float:
        return self.positions[-1] - self.positions[0]

    def arrival_times(self) -> np.ndarray:
        """Travel time of a left-incident wave from the first leg to each leg."""
        return self.x - self.positions[0]

    def with_omega(self, omega: float) -> "AtomLayout":
        return AtomLayout(omega, self.gamma_single, self.positions, self.weights)

    def with_gamma(self, gamma_single: float) -> "AtomLayout":
        return AtomLayout(self.omega, gamma_single, self.positions, self.weights)

    def shifted(self, offset: float) -> "AtomLayout":
        return AtomLayout(self.omega, self.gamma_single,
                          tuple(x + offset for x in self.positions), self.weights)

    def to_dict(self) -> dict:
        return {
            "omega": self.omega,
            "gamma_single": self.gamma_single,
            "positions": list(self.positions),
            "weights": list(self.weights),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AtomLayout":
        return cls(data["omega"], data["gamma_single"],
                   tuple(data["positions"]), tuple(data["weights"]))


def uniform_layout(n_legs: int, tau: float, sign_pattern: str = "uniform",
                   omega: float = 1.0, gamma_single: float = 0.0) -> AtomLayout:
    """Equally spaced legs ``x_m = (m - 1) tau`` with weights ``+1`` or ``(-1)**m``."""
    if int(n_legs) != n_legs or n_legs < 1:
        raise InvalidConfigurationError(f"n_legs must be a positive integer, got {n_legs}")
    n_legs = int(n_legs)
    if n_legs > 1 and not (tau > 0 and math.isfinite(tau)):
        raise InvalidConfigurationError(f"tau must be positive, got {tau}")
    if n_legs == 1 and not tau > 0:
        raise InvalidConfigurationError(f"tau must be positive, got {tau}")
    if sign_pattern not in SIGN_PATTERNS:
        raise InvalidConfigurationError(f"unknown sign pattern {sign_pattern!r}")
    m = np.arange(1, n_legs + 1)
    positions = tuple(float(v) for v in (m - 1) * tau)
    if sign_pattern == "uniform":
        weights = (1.0,) * n_legs
    else:
        weights = tuple(float(v) for v in (-1.0) ** m)
    return AtomLayout(omega, gamma_single, positions, weights)


def two_group_layout(n1: int, n2: int, tau: float, big_t: float, gamma1: float,
                     gamma2: float, sign_pattern: str = "uniform",
                     omega: float = 1.0) -> AtomLayout:
    """Two separated groups of equally spaced legs.

    ``big_t`` is the gap between the last leg of the first group and the first
    leg of the second.  Weights are scaled so the per-leg rates are
    ``gamma1`` and ``gamma2``; the layout's ``gamma_single`` is set to
    ``max(gamma1, gamma2)``.  With ``sign_pattern="alternating"`` the sign
    of leg ``m`` (global index from 1) is ``(-1)**m``.
    """
    if sign_pattern not in SIGN_PATTERNS:
        raise InvalidConfigurationError(f"unknown sign pattern {sign_pattern!r}")
    if gamma1 < 0 or gamma2 < 0:
        raise InvalidConfigurationError("group rates must be >= 0")
    ref = max(gamma1, gamma2)
    if ref == 0:
        s1 = s2 = 1.0
    else:
        s1, s2 = math.sqrt(gamma1 / ref), math.sqrt(gamma2 / ref)
    pos1 = [i * tau for i in range(n1)]
    start2 = pos1[-1] + big_t
    pos2 = [start2 + i * tau for i in range(n2)]
    weights = []
    for m in range(1, n1 + n2 + 1):
        sign = 1.0 if sign_pattern == "uniform" else (-1.0) ** m
        weights.append(sign * (s1 if m <= n1 else s2))
    return AtomLayout(omega, ref, tuple(pos1 + pos2), tuple(weights))


def total_decay_and_span(layout: AtomLayout) -> tuple[float, float]:
    """Total decay rate and delay across the whole atom.

    For equal-magnitude weights this is ``(N**2 gamma, x_N - x_1)``; for
    unequal magnitudes the rate generalizes to ``gamma * (sum |w_m|)**2``.
    """
    return layout.gamma_single * float(np.sum(np.abs(layout.w))) ** 2, layout.span


@dataclass(frozen=True)
class ControlSchedule:
    """Piecewise-constant, right-continuous control of the atom.

    ``omega[i]`` and ``coupling[i]`` hold on ``[switch_times[i-1], switch_times[i])``
    with the first segment extending to ``-inf`` and the last to ``+inf``.
    An ``omega`` entry of ``None`` means "use the layout frequency".
    ``coupling`` is a scale on ``gamma`` in ``[0, 1]``: 0 decouples the atom.
    """

    switch_times: tuple[float, ...] = ()
    omega: tuple[float | None, ...] = (None,)
    coupling: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        st = tuple(float(t) for t in self.switch_times)
        object.__setattr__(self, "switch_times", st)
        object.__setattr__(self, "omega",
                           tuple(None if w is None else float(w) for w in self.omega))
        object.__setattr__(self, "coupling", tuple(float(c) for c in self.coupling))
        if any(b <= a for a, b in zip(st, st[1:])):
            raise InvalidConfigurationError("switch_times must be strictly increasing")
        n_seg = len(st) + 1
        if len(self.omega) != n_seg or len(self.coupling) != n_seg:
            raise InvalidConfigurationError(
                f"schedule with {len(st)} switches needs {n_seg} omega and coupling values")
        if any(not (0.0 <= c <= 1.0) for c in self.coupling):
            raise InvalidConfigurationError("coupling scale must lie in [0, 1]")

    @classmethod
    def always_on(cls) -> "ControlSchedule":
        return cls()

    @classmethod
    def switched(cls, t_on: float | None = None, t_off: float | None = None,
                 omega_on: float | None = None,
                 omega_off: float | None = None) -> "ControlSchedule":
        """Off -> on at ``t_on`` and on -> off at ``t_off`` (either may be None).

        With ``omega_off=None`` the off state is exact decoupling; otherwise
        the atom stays coupled but is detuned to ``omega_off``.
        """
        times: list[float] = []
        omegas: list[float | None] = []
        couplings: list[float] = []

        def off_state():
            if omega_off is None:
                return omega_on, 0.0
            return omega_off, 1.0

        if t_on is not None:
            w, c = off_state()
            omegas.append(w)
            couplings.append(c)
            times.append(t_on)
        omegas.append(omega_on)
        couplings.append(1.0)
        if t_off is not None:
            if t_on is not None and t_off <= t_on:
                raise InvalidConfigurationError("t_off must come after t_on")
            times.append(t_off)
            w, c = off_state()
            omegas.append(w)
            couplings.append(c)
        return cls(tuple(times), tuple(omegas), tuple(couplings))

    def _segment(self, t: np.ndarray | float) -> np.ndarray:
        return np.searchsorted(np.asarray(self.switch_times), t, side="right")

    def coupling_on(self, t):
        seg = self._segment(t)
        return np.asarray(self.coupling)[seg]

    def omega_of_t(self, t, default: float):
        seg = self._segment(t)
        vals = np.array([default if w is None else w for w in self.omega])
        return vals[seg]

    def max_omega(self, default: float) -> float:
        return max(abs(default if w is None else w) for w in self.omega)

    def to_dict(self) -> dict:
        return {"switch_times": list(self.switch_times),
                "omega": list(self.omega), "coupling": list(self.coupling)}

    @classmethod
    def from_dict(cls, data: dict) -> "ControlSchedule":
        return cls(tuple(data.get("switch_times", ())),
                   tuple(data.get("omega", (None,))),
                   tuple(data.get("coupling", (1.0,))))


@dataclass(frozen=True)
class UnitsDoc:
    """Reference frequency and the matching wavelength (velocity 1)."""

    reference_frequency: float = 1.0
    reference_wavelength: float = field(init=False)

    def __post_init__(self):
        if not self.reference_frequency > 0:
            raise InvalidConfigurationError("reference frequency must be positive")
        object.__setattr__(self, "reference_wavelength",
                           2.0 * math.pi / self.reference_frequency)
