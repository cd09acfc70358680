"""Compiled fixed-step RK4 core for linear delay equations.

The state is a single complex amplitude ``y`` obeying

    y'(t) = -i det_j y - sum_k c_k g_jk y(t - k dt) + drive(t)

on step ``j`` (the interval ``[t_j, t_j+1]``).  Delays are integer numbers
of steps.  Delayed values are read from a cubic Hermite interpolant built
from the stored samples and the one-sided derivatives at both ends of each
step, so derivative jumps at step boundaries never leak into neighbouring
intervals.  History before ``t = 0`` is zero.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _delayed(i, theta, dt, y, fr, fl):
    if i < 0:
        return 0.0j
    if theta == 0:
        return y[i]
    if theta == 2:
        return y[i + 1]
    return 0.5 * (y[i] + y[i + 1]) + 0.125 * dt * (fr[i] - fl[i])


@njit(cache=True)
def _rhs(j, theta, state, dt, det, sqrt_gate, k_idx, coef, drive, y, fr, fl):
    g_now = sqrt_gate[j]
    acc = -1j * det[j] * state + drive
    for q in range(k_idx.shape[0]):
        k = k_idx[q]
        if k == 0:
            acc -= coef[q] * g_now * g_now * state
        else:
            i = j - k
            if i >= 0:
                acc -= coef[q] * g_now * sqrt_gate[i] * _delayed(i, theta, dt, y, fr, fl)
    return acc


@njit(cache=True)
def integrate_rk4(y0, n_steps, dt, det, sqrt_gate, k_idx, coef, d0, dmid, d1):
    """Integrate ``n_steps`` steps; returns samples and one-sided derivatives.

    ``d0[j]``, ``dmid[j]`` and ``d1[j]`` are the (already gated) drive values
    at the start, middle and end of step ``j``.  ``fr[j]`` is the derivative
    at ``t_j`` from the right and ``fl[j]`` the derivative at ``t_{j+1}``
    from the left.
    """
    y = np.zeros(n_steps + 1, dtype=np.complex128)
    fr = np.zeros(n_steps, dtype=np.complex128)
    fl = np.zeros(n_steps, dtype=np.complex128)
    y[0] = y0
    for j in range(n_steps):
        yj = y[j]
        k1 = _rhs(j, 0, yj, dt, det, sqrt_gate, k_idx, coef, d0[j], y, fr, fl)
        k2 = _rhs(j, 1, yj + 0.5 * dt * k1, dt, det, sqrt_gate, k_idx, coef, dmid[j], y, fr, fl)
        k3 = _rhs(j, 1, yj + 0.5 * dt * k2, dt, det, sqrt_gate, k_idx, coef, dmid[j], y, fr, fl)
        k4 = _rhs(j, 2, yj + dt * k3, dt, det, sqrt_gate, k_idx, coef, d1[j], y, fr, fl)
        ynew = yj + dt * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        y[j + 1] = ynew
        fr[j] = k1
        fl[j] = _rhs(j, 2, ynew, dt, det, sqrt_gate, k_idx, coef, d1[j], y, fr, fl)
    return y, fr, fl
