"""Pure-Python implementations of the two hot numerical kernels.

``ddspec._backend`` re-exports either these functions or the compiled
versions from ``ddspec._kernels_c`` (same signatures, same semantics).
Keep the two files in sync; the benchmark in ``benchmarks/`` compares
them for both speed and agreement.
"""
from __future__ import annotations

import math

import numpy as np

# Below this value of omega*T the complex-exponential sum for Y(omega)
# loses too many digits to cancellation, so a moment expansion is used.
SMALL_OMEGA_T = 1e-4


def _switching_coefficients(boundaries):
    """Telescoped coefficients c_j with Y(w) = sum_j c_j exp(i w t_j).

    boundaries = [0, t_1, ..., t_n, T]; the modulation sign on interval k
    is (-1)^k starting at +1.
    """
    b = np.asarray(boundaries, dtype=float)
    m = len(b) - 2  # number of pulses
    c = np.empty(m + 2)
    c[0] = -1.0
    for j in range(1, m + 1):
        c[j] = 2.0 * (-1.0) ** (j - 1)
    c[m + 1] = (-1.0) ** m
    return b, c


def y_abs2(boundaries, omegas):
    """|Y(omega)|^2 for the switching function defined by `boundaries`.

    Y(w) = sum_k (-1)^k (e^{i w t_{k+1}} - e^{i w t_k}).  Vectorized over
    `omegas`; small-omega values are evaluated by a moment expansion to
    avoid cancellation noise.
    """
    b, c = _switching_coefficients(boundaries)
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    T = b[-1]
    out = np.empty_like(w)

    small = np.abs(w) * T < SMALL_OMEGA_T
    big = ~small
    if np.any(big):
        phase = np.exp(1j * np.outer(w[big], b))
        out[big] = np.abs(phase @ c) ** 2
    if np.any(small):
        # Y = sum_{p>=1} (i w)^p M_p with M_p = sum_j c_j t_j^p / p!
        # (the p = 0 moment vanishes identically).
        ws = w[small]
        acc = np.zeros(len(ws), dtype=complex)
        fact = 1.0
        for p in range(1, 7):
            fact *= p
            m_p = float(np.dot(c, b**p)) / fact
            acc += (1j * ws) ** p * m_p
        out[small] = np.abs(acc) ** 2
    return out


def _quat_mul(a0, a1, a2, a3, b0, b1, b2, b3):
    # product of SU(2) elements written as w*I - i*(x,y,z).sigma
    return (
        a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
        a0 * b1 + b0 * a1 + a2 * b3 - a3 * b2,
        a0 * b2 + b0 * a2 + a3 * b1 - a1 * b3,
        a0 * b3 + b0 * a3 + a1 * b2 - a2 * b1,
    )


def conditional_mod(boundaries, wpar, wperp, omega_l, ms):
    """Re Tr(U0 U1^dag)/2 for one nuclear spin under the pulse pattern.

    The conditional Hamiltonians use spin operators I = sigma/2:
    H0 = omega_l I_z, H1 = (ms*wpar + omega_l) I_z + ms*wperp I_x.
    `boundaries` = [0, t_1, ..., t_n, T] in microseconds, frequencies in
    rad/us.
    """
    hz = (0.5 * omega_l, 0.5 * (ms * wpar + omega_l))
    hx = (0.0, 0.5 * ms * wperp)
    om = (math.hypot(hx[0], hz[0]), math.hypot(hx[1], hz[1]))

    u0 = (1.0, 0.0, 0.0, 0.0)
    u1 = (1.0, 0.0, 0.0, 0.0)
    n_int = len(boundaries) - 1
    for k in range(n_int):
        tau = boundaries[k + 1] - boundaries[k]
        which0 = k % 2  # H0 on even free intervals for U0, swapped for U1
        for which, u in ((which0, 0), (1 - which0, 1)):
            o = om[which]
            theta = o * tau
            cth = math.cos(theta)
            sth = math.sin(theta)
            if o > 0.0:
                sx = sth * hx[which] / o
                sz = sth * hz[which] / o
            else:
                sx = sz = 0.0
            if u == 0:
                u0 = _quat_mul(cth, sx, 0.0, sz, *u0)
            else:
                u1 = _quat_mul(cth, sx, 0.0, sz, *u1)
    return u0[0] * u1[0] + u0[1] * u1[1] + u0[2] * u1[2] + u0[3] * u1[3]


def conditional_mod_batch(boundaries, wpars, wperps, omega_l, ms):
    """conditional_mod for many couplings sharing one pulse pattern."""
    b = [float(x) for x in boundaries]
    return np.array(
        [conditional_mod(b, float(p), float(q), omega_l, ms) for p, q in zip(wpars, wperps)]
    )
