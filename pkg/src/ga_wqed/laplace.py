"""Poles of the atom propagator and the residue (pole-sum) solutions.

With the delay table ``(d, W_d)`` the Laplace-domain atom amplitude is
``1/F(s)`` where

    F(s) = s + i Omega + gamma/2 * sum_d W_d exp(-s d).

``F`` is entire, so the inverse transform is a sum over its zeros ``s_n``
with weights ``1/F'(s_n)``.  The zeros are found by multi-start Newton
iteration on a rectangular seed grid followed by a deflated second pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.special import lambertw

from .errors import DegeneratePoleError, InvalidConfigurationError, NumericalFailure
from .kernel import DelayTable, build_delay_table
from .model import AtomLayout, total_decay_and_span

RESIDUAL_RTOL = 1e-10
DEDUP_RTOL = 1e-8
DARK_RTOL = 1e-9
DEGENERATE_TOL = 1e-10


@dataclass(frozen=True)
class SearchWindow:
    """Rectangle ``re_min <= Re s <= re_max``, ``im_min <= Im s <= im_max`` and its seed grid."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    grid: tuple[int, int] = (32, 32)

    def contains(self, s, pad: float = 0.0):
        s = np.asarray(s)
        return ((s.real >= self.re_min - pad) & (s.real <= self.re_max + pad)
                & (s.imag >= self.im_min - pad) & (s.imag <= self.im_max + pad))


@dataclass
class PoleSet:
    """Simple zeros of ``F`` inside a search window, sorted by ``|Re s|``."""

    s: np.ndarray
    denom_deriv: np.ndarray
    is_dark: np.ndarray
    window: SearchWindow
    omega: float
    scale: float
    diagnostic: str = ""
    extra: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.s)

    def __iter__(self):
        return iter(zip(self.s.tolist(), self.denom_deriv.tolist(), self.is_dark.tolist()))

    @property
    def residues(self) -> np.ndarray:
        return 1.0 / self.denom_deriv

    @property
    def dark_poles(self) -> np.ndarray:
        return self.s[self.is_dark]

    def truncation_error(self) -> float:
        """Mismatch of the truncated residue sum at ``t = 0`` from its complete-set value.

        The complete sum equals 1 for a point atom and 1/2 once delayed
        terms exist (see :func:`chi_of_t`).
        """
        target = 0.5 if self.extra.get("delayed", False) else 1.0
        return float(abs(pole_sum(self, 0.0)[0] - target))


def pole_function(table: DelayTable, omega: float, gamma: float, s):
    s = np.asarray(s, dtype=complex)
    return s + 1j * omega + table.kernel_sum(s, gamma)


def residue_denominator(table: DelayTable, gamma: float, s):
    """``F'(s) = 1 - gamma/2 sum_d W_d d exp(-s d)``."""
    return 1.0 + table.kernel_sum_derivative(s, gamma)


def _scale(layout: AtomLayout) -> float:
    gamma_tot, _ = total_decay_and_span(layout)
    return max(abs(layout.omega), gamma_tot, 1e-300)


def default_window(layout: AtomLayout, grid: tuple[int, int] = (32, 32)) -> SearchWindow:
    """``Re s in [-1.2 gamma_tot, 1e-6]``, ``Im s`` within ``3 pi / tau_min`` of ``-Omega``."""
    table = build_delay_table(layout)
    gamma_tot, _ = total_decay_and_span(layout)
    tau_min = table.min_positive_delay
    half = 3 * math.pi / tau_min if tau_min else max(gamma_tot, 1.0)
    re_min = -1.2 * gamma_tot if gamma_tot > 0 else -1.0
    return SearchWindow(re_min, 1e-6, -layout.omega - half, -layout.omega + half, grid)


def wide_window(layout: AtomLayout, n_branches: int = 200) -> SearchWindow:
    """Window reaching ``n_branches`` pole spacings ``2 pi / d_max`` either side of ``-Omega``.

    Far from the real axis the zeros drift left only logarithmically, roughly
    to ``Re s = -log(2|s| / (gamma |W_max|)) / d_max``; the left edge is set
    a safe margin beyond that.
    """
    table = build_delay_table(layout)
    gamma_tot, _ = total_decay_and_span(layout)
    d_max = table.max_delay
    if d_max <= 0 or layout.gamma_single == 0.0:
        return default_window(layout)
    half = 2 * math.pi * n_branches / d_max
    w_far = abs(table.weight_sums[-1]) * 0.5 * layout.gamma_single
    s_far = abs(layout.omega) + half
    depth = math.log(max(2.0 * s_far / w_far, 2.0)) + 10.0
    re_min = -max(depth / d_max, 1.2 * gamma_tot)
    return SearchWindow(re_min, 1e-6, -layout.omega - half, -layout.omega + half, (24, 64))


def asymptotic_seeds(layout: AtomLayout, window: SearchWindow,
                     max_branches: int = 2_000_000) -> np.ndarray:
    """Seeds on the chain of zeros set by the longest delay.

    Keeping only the zero-delay and longest-delay terms turns ``F(s) = 0`` into
    ``(s + a) exp((s + a) d) = -b d exp(a d)``, solved branch by branch with
    the Lambert W function.  Far from ``-i Omega`` these are close to the
    exact zeros, so Newton converges from them in a few steps.
    """
    table = build_delay_table(layout)
    d = table.max_delay
    if d <= 0 or layout.gamma_single == 0.0 or table.weight_sums[-1] == 0.0:
        return np.zeros(0, dtype=complex)
    a = 1j * layout.omega + 0.5 * layout.gamma_single * table.weight_sums[0]
    b = 0.5 * layout.gamma_single * table.weight_sums[-1]
    z = -b * d * np.exp(a * d)
    # branch k sits near Im s = -Omega + 2 pi k / d (up to a bounded offset)
    k_lo = math.floor((window.im_min + layout.omega) * d / (2 * math.pi)) - 2
    k_hi = math.ceil((window.im_max + layout.omega) * d / (2 * math.pi)) + 2
    if k_hi - k_lo > max_branches:
        raise InvalidConfigurationError("search window needs too many asymptotic branches")
    ks = np.arange(k_lo, k_hi + 1)
    w = np.array([lambertw(z, int(k)) for k in ks], dtype=complex)
    return -a + w / d


def _newton(table, omega, gamma, s, roots, n_iter, tol):
    """Vectorized Newton on ``F``, deflated by the zeros in ``roots``."""
    s = s.copy()
    active = np.ones(len(s), dtype=bool)
    for _ in range(n_iter):
        if not np.any(active):
            break
        sa = s[active]
        f = pole_function(table, omega, gamma, sa)
        fp = residue_denominator(table, gamma, sa)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = fp / f
            if len(roots):
                ratio = ratio - np.sum(1.0 / (sa[:, None] - roots[None, :]), axis=1)
            step = 1.0 / ratio
        bad = ~np.isfinite(step)
        step[bad] = 0.0
        sa = sa - step
        s[active] = sa
        done = (np.abs(step) < tol) | bad
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return s


def _polish(table, omega, gamma, s, n_iter=8):
    for _ in range(n_iter):
        f = pole_function(table, omega, gamma, s)
        fp = residue_denominator(table, gamma, s)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(fp != 0, f / fp, 0.0)
        s = s - np.where(np.isfinite(step), step, 0.0)
    return s


def _dedup(z: np.ndarray, radius: float, lookback: int = 8) -> np.ndarray:
    """Drop points closer than ``radius`` to an earlier kept point (sorted by Im)."""
    if len(z) == 0:
        return z
    z = z[np.argsort(z.imag, kind="stable")]
    keep = np.ones(len(z), dtype=bool)
    for j in range(1, lookback + 1):
        close = np.zeros(len(z), dtype=bool)
        close[j:] = np.abs(z[j:] - z[:-j]) < radius
        keep &= ~(close & np.roll(keep, j))
    return z[keep]


def find_poles(layout: AtomLayout, window: SearchWindow | None = None, **kwargs) -> PoleSet:
    """Zeros of ``F`` in ``window`` (default :func:`default_window`).

    Seeds are a uniform ``window.grid`` plus, with ``asymptotic=True``, the
    Lambert-W seeds of :func:`asymptotic_seeds`.  A second pass restarts the
    grid seeds with the found zeros divided out.  Zeros are deduplicated
    within ``1e-8 * max(|Omega|, gamma_tot)``.

    Returns an empty :class:`PoleSet` with a diagnostic when no seed
    converges; raises :class:`DegeneratePoleError` when ``|F'|`` vanishes at
    an accepted zero.
    """
    # diverging seeds overflow exp(-s d) before they are discarded
    with np.errstate(over="ignore", invalid="ignore"):
        return _find_poles(layout, window, **kwargs)


def _find_poles(layout: AtomLayout, window: SearchWindow | None = None,
                grid: tuple[int, int] | None = None, n_iter: int = 60,
                deflation_passes: int = 1,
                dark_tolerance: float | None = None,
                asymptotic: bool = True) -> PoleSet:
    """Body of :func:`find_poles`."""
    window = window or default_window(layout)
    if grid is not None:
        window = SearchWindow(window.re_min, window.re_max, window.im_min, window.im_max, grid)
    n_re, n_im = window.grid
    if n_re < 16 or n_im < 16:
        raise InvalidConfigurationError("seed grid must be at least 16 x 16")
    table = build_delay_table(layout)
    gamma = layout.gamma_single
    omega = layout.omega
    scale = _scale(layout)
    res_tol = RESIDUAL_RTOL * scale
    radius = DEDUP_RTOL * scale
    dark_tol = (DARK_RTOL * scale) if dark_tolerance is None else dark_tolerance

    if gamma == 0.0:
        s = np.array([-1j * omega])
        return PoleSet(s, np.ones(1, dtype=complex), np.array([True]), window, omega, scale,
                       "free atom", {"n_seeds": 0})

    re = np.linspace(window.re_min, window.re_max, n_re)
    im = np.linspace(window.im_min, window.im_max, n_im)
    grid_seeds = (re[:, None] + 1j * im[None, :]).ravel()
    far_seeds = asymptotic_seeds(layout, window) if asymptotic else np.zeros(0, dtype=complex)
    d_max = table.max_delay
    pad = 1e-9 * scale
    notes = []

    def accept(cand):
        cand = cand[np.isfinite(cand)]
        cand = _polish(table, omega, gamma, cand)
        resid = np.abs(pole_function(table, omega, gamma, cand))
        # far from the origin exp(-s d) cannot be evaluated to better than
        # about eps |s| d in phase, which floors the attainable residual
        floor = 64 * np.finfo(float).eps * np.abs(cand) * (1.0 + np.abs(cand) * d_max)
        ok = (resid < np.maximum(res_tol, floor)) & window.contains(cand, pad)
        return cand[ok]

    roots = accept(_newton(table, omega, gamma, np.concatenate([grid_seeds, far_seeds]),
                           np.zeros(0, dtype=complex), n_iter, 1e-13 * scale))
    roots = _dedup(roots, radius)
    for _ in range(deflation_passes):
        if len(grid_seeds) * max(len(roots), 1) > 5e7:
            notes.append("deflation skipped (too many zeros for a dense pass)")
            break
        extra = accept(_newton(table, omega, gamma, grid_seeds, roots, n_iter, 1e-13 * scale))
        roots = _dedup(np.concatenate([roots, extra]), radius)
    n_seeds = len(grid_seeds) + len(far_seeds)

    if len(roots) == 0:
        return PoleSet(np.zeros(0, dtype=complex), np.zeros(0, dtype=complex),
                       np.zeros(0, dtype=bool), window, omega, scale,
                       "Newton iteration did not converge from any seed",
                       {"n_seeds": n_seeds})
    order = np.lexsort((roots.imag, np.abs(roots.real)))
    roots = roots[order]
    denom = residue_denominator(table, gamma, roots)
    if np.any(np.abs(denom) < DEGENERATE_TOL):
        bad = roots[np.abs(denom) < DEGENERATE_TOL][0]
        raise DegeneratePoleError(f"double pole near s = {bad}: residue formula invalid")
    dark = np.abs(roots.real) < dark_tol
    delayed = bool(np.any(table.weight_sums[table.delays > 0] != 0.0))
    return PoleSet(roots, denom, dark, window, omega, scale, "; ".join(notes),
                   {"n_seeds": n_seeds, "delayed": delayed})


def _require(poles: PoleSet):
    if len(poles) == 0:
        raise NumericalFailure("empty pole set" + (f": {poles.diagnostic}" if poles.diagnostic else ""))


def pole_sum(poles: PoleSet, t, chunk: int = 2_000_000, cutoff: float = 1e-17) -> np.ndarray:
    """Raw residue sum ``sum_n exp(s_n t) / F'(s_n)`` on an array of times.

    Terms whose magnitude bound ``|1/F'| exp(Re s_n t)`` is below ``cutoff``
    at the earliest time of a chunk are skipped.
    """
    _require(poles)
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    flat_t = tt.ravel()
    order = np.argsort(flat_t, kind="stable")
    out = np.empty(len(flat_t), dtype=complex)
    res = poles.residues
    mag = np.abs(res)
    i = 0
    while i < len(order):
        t_min = max(flat_t[order[i]], 0.0)
        keep = mag * np.exp(poles.s.real * t_min) > cutoff
        n_keep = max(int(keep.sum()), 1)
        step = max(1, chunk // n_keep)
        idx = order[i:i + step]
        out[idx] = np.exp(np.multiply.outer(flat_t[idx], poles.s[keep])) @ res[keep]
        i += step
    return out.reshape(tt.shape)


def chi_of_t(poles: PoleSet, t):
    """Atom amplitude for a unit initial excitation, from the residue sum.

    For ``t > 0`` this is ``sum_n exp(s_n t) / F'(s_n)``.  The expansion
    only holds for ``t > 0``: with delayed terms present the full sum at
    ``t = 0`` converges to 1/2, the midpoint of the jump from the zero
    history.  ``t = 0`` therefore returns the initial value 1.
    """
    tt = np.asarray(t, dtype=float)
    if np.any(tt < 0):
        raise ValueError("chi is evaluated for t >= 0 only")
    val = pole_sum(poles, tt)
    val = np.where(np.atleast_1d(tt) == 0.0, 1.0 + 0j, val)
    return complex(val.ravel()[0]) if np.ndim(tt) == 0 else val.reshape(tt.shape)


def stationary_denominator(layout: AtomLayout, omega_k, table: DelayTable | None = None):
    """``F(-i omega) = i(Omega - omega) + gamma/2 sum_d W_d exp(i omega d)``."""
    table = table or build_delay_table(layout)
    return pole_function(table, layout.omega, layout.gamma_single, -1j * np.asarray(omega_k, float))


def xi_k_of_t(poles: PoleSet, layout: AtomLayout, k, t, cutoff: float = 1e-17):
    """Amplitude of the emitted field in mode ``k`` (``omega_k = |k|``) at time ``t``.

    Broadcasts over ``k`` and ``t``.  Modes whose frequency sits on a pole
    (within the dedup radius) are decoupled and return 0.  Pole terms whose
    weight ``|1/F'| exp(Re s t)`` is below ``cutoff`` are skipped.
    """
    k, t = np.broadcast_arrays(np.asarray(k, dtype=float), np.asarray(t, dtype=float))
    if layout.gamma_single == 0.0:
        return np.zeros(k.shape, dtype=complex)
    _require(poles)
    kf, tf = k.ravel(), t.ravel()
    wk = np.abs(kf)
    table = build_delay_table(layout)
    pref = -1j * math.sqrt(layout.gamma_single / (4 * math.pi))
    form = np.exp(1j * np.multiply.outer(kf, layout.x)) @ layout.w
    drive_part = np.exp(-1j * wk * tf) / stationary_denominator(layout, wk, table)
    keep = np.abs(poles.residues) * np.exp(poles.s.real * max(float(tf.min()), 0.0)) > cutoff
    sp = poles.s[keep]
    rp = poles.residues[keep]
    pole_part = np.empty(len(kf), dtype=complex)
    on_pole = np.zeros(len(kf), dtype=bool)
    step = max(1, 2_000_000 // max(len(sp), 1))
    for i in range(0, len(kf), step):
        shift = sp[None, :] + 1j * wk[i:i + step, None]
        near = np.abs(shift) < DEDUP_RTOL * poles.scale
        on_pole[i:i + step] = near.any(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.exp(sp[None, :] * tf[i:i + step, None]) * rp[None, :] / shift
        terms[near] = 0.0
        pole_part[i:i + step] = terms.sum(axis=1)
    val = pref * form * (pole_part + drive_part)
    val[on_pole] = 0.0
    return val.reshape(k.shape)


def default_k_grid(layout: AtomLayout, t: float, k_max_factor: float = 6.0) -> np.ndarray:
    """Symmetric grid on ``[-k_max, k_max]`` resolving the line shape at time ``t``.

    ``k_max = k_max_factor * Omega``; the spacing is the smallest of
    ``Omega/200``, ``gamma_tot/40`` and ``2 pi/(20 t)`` and the interval count
    is even.
    """
    om = abs(layout.omega)
    k_max = k_max_factor * om
    h = om / 200.0
    gamma_tot, _ = total_decay_and_span(layout)
    if gamma_tot > 0:
        h = min(h, gamma_tot / 40.0)
    if t > 0:
        h = min(h, 2 * math.pi / (20.0 * t))
    n = int(math.ceil(k_max / h))
    n += n % 2
    return np.linspace(-k_max, k_max, 2 * n + 1)


def conservation_check(poles: PoleSet, layout: AtomLayout, t: float,
                       k_grid=None) -> float:
    """``|chi(t)|**2 + integral |xi_k(t)|**2 dk - 1`` by Simpson on ``k_grid``.

    ``k_grid`` should cover both signs of ``k`` (default :func:`default_k_grid`).
    """
    if layout.gamma_single == 0.0:
        return 0.0
    k = default_k_grid(layout, t) if k_grid is None else np.asarray(k_grid, dtype=float)
    dens = np.abs(xi_k_of_t(poles, layout, k, t)) ** 2
    return float(abs(chi_of_t(poles, t)) ** 2 + simpson(dens, x=k) - 1.0)
