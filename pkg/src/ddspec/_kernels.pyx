# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of ddspec._kernels_py.  Same signatures, same semantics."""

from libc.math cimport cos, sin, hypot, fabs

import numpy as np

DEF SMALL_OMEGA_T = 1e-4


def y_abs2(boundaries, omegas):
    """|Y(omega)|^2 of the switching function; vectorized over omegas."""
    cdef double[::1] b = np.ascontiguousarray(boundaries, dtype=np.float64)
    cdef double[::1] w = np.ascontiguousarray(
        np.atleast_1d(np.asarray(omegas, dtype=np.float64)))
    cdef Py_ssize_t nb = b.shape[0]
    cdef Py_ssize_t nw = w.shape[0]
    cdef Py_ssize_t m = nb - 2
    out_arr = np.empty(nw, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] c = np.empty(nb, dtype=np.float64)
    cdef Py_ssize_t i, j, p
    cdef double T = b[nb - 1]
    cdef double re, im, cj, wi, ph
    cdef double acc_re, acc_im, m_p, fact, wp, tmp

    c[0] = -1.0
    for j in range(1, m + 1):
        c[j] = 2.0 if (j - 1) % 2 == 0 else -2.0
    c[nb - 1] = 1.0 if m % 2 == 0 else -1.0

    for i in range(nw):
        wi = w[i]
        if fabs(wi) * T < SMALL_OMEGA_T:
            # moment expansion: Y = sum_{p>=1} (i w)^p M_p
            acc_re = 0.0
            acc_im = 0.0
            fact = 1.0
            for p in range(1, 7):
                fact *= p
                m_p = 0.0
                for j in range(nb):
                    tmp = 1.0
                    # b[j]**p
                    for _ in range(p):
                        tmp *= b[j]
                    m_p += c[j] * tmp
                m_p /= fact
                wp = 1.0
                for _ in range(p):
                    wp *= wi
                if p % 4 == 0:
                    acc_re += wp * m_p
                elif p % 4 == 1:
                    acc_im += wp * m_p
                elif p % 4 == 2:
                    acc_re -= wp * m_p
                else:
                    acc_im -= wp * m_p
            out[i] = acc_re * acc_re + acc_im * acc_im
        else:
            re = 0.0
            im = 0.0
            for j in range(nb):
                cj = c[j]
                ph = wi * b[j]
                re += cj * cos(ph)
                im += cj * sin(ph)
            out[i] = re * re + im * im
    return out_arr


cdef inline double _cond_mod_one(double[::1] b, double wpar, double wperp,
                                 double omega_l, double ms) nogil:
    cdef double hz0 = 0.5 * omega_l
    cdef double hz1 = 0.5 * (ms * wpar + omega_l)
    cdef double hx1 = 0.5 * ms * wperp
    cdef double om0 = fabs(hz0)
    cdef double om1 = hypot(hx1, hz1)
    cdef Py_ssize_t n_int = b.shape[0] - 1
    cdef Py_ssize_t k
    cdef double tau, theta, cth, sth, sx, sz
    cdef double hz, hx, om
    # quaternions (w, x, y, z) for U = w*I - i*(x,y,z).sigma
    cdef double a0 = 1.0, a1 = 0.0, a2 = 0.0, a3 = 0.0
    cdef double q0 = 1.0, q1 = 0.0, q2 = 0.0, q3 = 0.0
    cdef double r0, r1, r2, r3
    cdef int which0, u, which

    for k in range(n_int):
        tau = b[k + 1] - b[k]
        which0 = k % 2
        for u in range(2):
            which = which0 if u == 0 else 1 - which0
            if which == 0:
                hz = hz0
                hx = 0.0
                om = om0
            else:
                hz = hz1
                hx = hx1
                om = om1
            theta = om * tau
            cth = cos(theta)
            sth = sin(theta)
            if om > 0.0:
                sx = sth * hx / om
                sz = sth * hz / om
            else:
                sx = 0.0
                sz = 0.0
            if u == 0:
                r0 = cth * a0 - sx * a1 - sz * a3
                r1 = cth * a1 + a0 * sx - sz * a2
                r2 = cth * a2 + sz * a1 - sx * a3
                r3 = cth * a3 + a0 * sz + sx * a2
                a0 = r0; a1 = r1; a2 = r2; a3 = r3
            else:
                r0 = cth * q0 - sx * q1 - sz * q3
                r1 = cth * q1 + q0 * sx - sz * q2
                r2 = cth * q2 + sz * q1 - sx * q3
                r3 = cth * q3 + q0 * sz + sx * q2
                q0 = r0; q1 = r1; q2 = r2; q3 = r3
    return a0 * q0 + a1 * q1 + a2 * q2 + a3 * q3


def conditional_mod(boundaries, wpar, wperp, omega_l, ms):
    """Re Tr(U0 U1^dag)/2 for one nuclear spin under the pulse pattern."""
    cdef double[::1] b = np.ascontiguousarray(boundaries, dtype=np.float64)
    return _cond_mod_one(b, wpar, wperp, omega_l, ms)


def conditional_mod_batch(boundaries, wpars, wperps, omega_l, ms):
    """conditional_mod for many couplings sharing one pulse pattern."""
    cdef double[::1] b = np.ascontiguousarray(boundaries, dtype=np.float64)
    cdef double[::1] p = np.ascontiguousarray(wpars, dtype=np.float64)
    cdef double[::1] q = np.ascontiguousarray(wperps, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double wl = omega_l
    cdef double msd = ms
    cdef Py_ssize_t i
    for i in range(n):
        out[i] = _cond_mod_one(b, p[i], q[i], wl, msd)
    return out_arr
