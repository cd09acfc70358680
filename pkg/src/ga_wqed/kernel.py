"""Delay (memory) kernel of a giant atom and the two-group effective model."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidConfigurationError, SingularPhaseError
from .model import SIGN_PATTERNS, AtomLayout


@dataclass(frozen=True)
class DelayTable:
    """Distinct pairwise delays with the summed products of leg weights.

    ``weight_sums[i]`` is the sum of ``w_m * w_m'`` over all *ordered* pairs
    of legs whose separation equals ``delays[i]``.  ``delays[0]`` is 0.
    """

    delays: np.ndarray
    weight_sums: np.ndarray

    def __iter__(self):
        return iter(zip(self.delays.tolist(), self.weight_sums.tolist()))

    def __len__(self):
        return len(self.delays)

    @property
    def max_delay(self) -> float:
        return float(self.delays[-1])

    @property
    def min_positive_delay(self) -> float | None:
        pos = self.delays[self.delays > 0]
        return float(pos[0]) if len(pos) else None

    def kernel_sum(self, s, gamma: float):
        """``gamma/2 * sum_d W_d exp(-s d)`` evaluated elementwise on ``s``."""
        s = np.asarray(s, dtype=complex)
        e = np.exp(-np.multiply.outer(s, self.delays))
        return 0.5 * gamma * (e @ self.weight_sums)

    def kernel_sum_derivative(self, s, gamma: float):
        """d/ds of :meth:`kernel_sum`."""
        s = np.asarray(s, dtype=complex)
        e = np.exp(-np.multiply.outer(s, self.delays))
        return -0.5 * gamma * (e @ (self.weight_sums * self.delays))


def build_delay_table(layout: AtomLayout) -> DelayTable:
    """Enumerate all ordered leg pairs and merge equal delays.

    Delays closer than ``1e-12`` times the largest delay are merged.
    """
    x, w = layout.x, layout.w
    d = np.abs(x[:, None] - x[None, :]).ravel()
    ww = (w[:, None] * w[None, :]).ravel()
    order = np.argsort(d, kind="stable")
    d, ww = d[order], ww[order]
    tol = 1e-12 * (d[-1] if d[-1] > 0 else 1.0)
    delays: list[float] = []
    sums: list[float] = []
    for di, wi in zip(d, ww):
        if delays and di - delays[-1] <= tol:
            sums[-1] += wi
        else:
            delays.append(0.0 if not delays else float(di))
            sums.append(float(wi))
    return DelayTable(np.array(delays), np.array(sums))


def two_group_counts(n1: int, n2: int) -> list[int]:
    """Ordered-pair multiplicities of the cross delays ``T + n tau`` between two groups.

    Returns ``2 (n+1)`` for ``n < n1``, ``2 n1`` for ``n1 <= n < n2`` and
    ``2 (n1 + n2 - n - 1)`` for larger ``n``, for ``n = 0 .. n1 + n2 - 2``.
    """
    _check_even_groups(n1, n2)
    counts = []
    for n in range(n1 + n2 - 1):
        if n < n1:
            counts.append(2 * (n + 1))
        elif n < n2:
            counts.append(2 * n1)
        else:
            counts.append(2 * (n1 + n2 - n - 1))
    return counts


def _check_even_groups(n1, n2):
    if int(n1) != n1 or int(n2) != n2:
        raise InvalidConfigurationError("group sizes must be integers")
    if n1 < 2 or n2 < 2 or n1 % 2 or n2 % 2:
        raise InvalidConfigurationError(
            f"group sizes must be even and >= 2, got ({n1}, {n2})")
    if n1 > n2:
        raise InvalidConfigurationError(f"need n1 <= n2, got ({n1}, {n2})")


@dataclass(frozen=True)
class EffectiveTwoPoint:
    """Reduced model ``d beta/dt = -i(Omega + delta) beta - g1 beta - g2 beta(t - T~)``."""

    delta_tilde: float
    gamma1_tilde: float
    gamma2_tilde: float
    T_tilde: float


def effective_two_point(gamma1: float, gamma2: float, n1: int, n2: int,
                        omega_tau: float, big_t: float, pattern: str,
                        tau: float = 1.0) -> EffectiveTwoPoint:
    """Lamb shift and effective rates of two well-separated groups of legs.

    ``big_t`` is the delay between the innermost legs of the two groups and
    ``tau`` the intra-group spacing; the effective legs sit at the group
    centres, ``T~ = T + (n1 + n2) tau / 2 - tau`` apart.
    """
    _check_even_groups(n1, n2)
    if pattern not in SIGN_PATTERNS:
        raise InvalidConfigurationError(f"unknown sign pattern {pattern!r}")
    if pattern == "alternating":
        denom = 1.0 + math.cos(omega_tau)
    else:
        denom = 1.0 - math.cos(omega_tau)
    if abs(denom) < 1e-9:
        raise SingularPhaseError(
            f"reduction diverges at omega*tau = {omega_tau!r} for the {pattern} pattern")
    n_bar = (n1 + n2) / 2
    dn = (n2 - n1) / 2
    shift = 0.0
    g1 = 0.0
    for gj, nj in ((gamma1, n1), (gamma2, n2)):
        if pattern == "alternating":
            shift += -0.5 * gj * (nj * math.sin(omega_tau) + math.sin(nj * omega_tau)) / denom
        else:
            shift += 0.5 * gj * (nj * math.sin(omega_tau) - math.sin(nj * omega_tau)) / denom
        g1 += 0.5 * gj * (1.0 - math.cos(nj * omega_tau)) / denom
    g2 = math.sqrt(gamma1 * gamma2) * (math.cos(dn * omega_tau) - math.cos(n_bar * omega_tau)) / denom
    t_tilde = big_t + (n1 + n2) * tau / 2 - tau
    return EffectiveTwoPoint(shift, g1, g2, t_tilde)
