"""Filter-function evaluation and the coherence functional.

The decay exponent is chi = integral dw/(pi w^2) S(w) |Y(w)|^2 with
Y(w) = sum_k (-1)^k (e^{i w t_{k+1}} - e^{i w t_k}).  This normalization
is pinned by the Parseval identity (1/pi) int |Y|^2/w^2 dw = T, which
makes a flat spectrum S = y0 give chi = y0*T exactly and the harmonic
comb expression emerge in the large-n limit.
"""
from __future__ import annotations

import math

import numpy as np

from . import _backend
from ._quadrature import IntegrationError, adaptive_gauss_kronrod
from .model import GaussianNSD, TabulatedNSD, khz_to_rad_us, nsd_eval

__all__ = [
    "filter_y_squared",
    "chi",
    "comb_rate",
    "parseval_time",
    "IntegrationError",
]


def filter_y_squared(seq, omega):
    """|Y(omega)|^2, dimensionless; omega in rad/us, scalar or array."""
    scalar = np.isscalar(omega)
    out = _backend.y_abs2(seq.boundaries, np.atleast_1d(omega))
    return float(out[0]) if scalar else np.asarray(out)


def _filter_weight(seq, omega):
    """|Y|^2 / (pi w^2), the kernel weighting the NSD in chi."""
    w = np.asarray(omega, dtype=float)
    return _backend.y_abs2(seq.boundaries, w) / (math.pi * w**2)


def _lobe_breakpoints(lo, hi, total_time, cap=600):
    """Breakpoints at the filter oscillation scale pi/T, at most `cap` long."""
    k0 = math.floor(lo * total_time / math.pi)
    k1 = math.ceil(hi * total_time / math.pi)
    step = max(1, -(-(k1 - k0) // cap))
    pts = (math.pi / total_time) * np.arange(k0, k1 + 1, step, dtype=float)
    pts = pts[(pts > lo) & (pts < hi)]
    return np.concatenate(([lo], pts, [hi]))


def chi(seq, nsd, rtol=1e-6):
    """Decay exponent of Eq.-style coherence W = exp(-chi); always >= 0.

    The flat part of the spectrum is integrated in closed form through
    the Parseval identity (its quadrature would otherwise need an
    arbitrarily long frequency tail); only the compact peak part is done
    numerically, on segments seeded at the filter lobes.
    """
    T = seq.total_time
    if isinstance(nsd, GaussianNSD):
        total = nsd.y0 * T
        if nsd.a > 0:
            sig = float(khz_to_rad_us(nsd.sigma_khz))
            pk = nsd.omega_peak
            lo = max(pk - 12.0 * sig, 1e-9)
            hi = pk + 12.0 * sig
            pts = _lobe_breakpoints(lo, hi, T)
            pts = np.concatenate(
                (pts, pk + sig * np.array([-6, -3, -2, -1, -0.5, 0, 0.5, 1, 2, 3, 6]))
            )
            pts = np.clip(pts, lo, hi)

            def peak_part(w):
                nu = w - pk
                return (
                    nsd.a
                    * np.exp(-(nu**2) / (2.0 * sig**2))
                    * _filter_weight(seq, w)
                )

            val, _ = adaptive_gauss_kronrod(peak_part, pts, rtol=rtol)
            total += val
        return max(float(total), 0.0)

    if isinstance(nsd, TabulatedNSD):
        om = np.asarray(nsd.omegas)
        s = np.asarray(nsd.values)
        pts = np.unique(
            np.concatenate((om, _lobe_breakpoints(om[0], om[-1], T)))
        )

        def mid_part(w):
            return nsd_eval(nsd, w) * _filter_weight(seq, w)

        total, _ = adaptive_gauss_kronrod(mid_part, pts, rtol=rtol)
        if s[0] > 0:
            low, _ = adaptive_gauss_kronrod(
                lambda w: _filter_weight(seq, w),
                _lobe_breakpoints(1e-9, om[0], T),
                rtol=rtol,
            )
            total += s[0] * low
        if s[-1] > 0:
            # clamped tail: S = s[-1] for w > om[-1]; by Parseval the
            # remaining filter weight is T minus what is below om[-1]
            below, _ = adaptive_gauss_kronrod(
                lambda w: _filter_weight(seq, w),
                _lobe_breakpoints(1e-9, om[-1], T),
                rtol=rtol,
            )
            total += s[-1] * max(T - below, 0.0)
        return max(float(total), 0.0)

    raise TypeError(f"unsupported NSD type: {type(nsd).__name__}")


def comb_rate(nsd, omega, l_max=2):
    """Harmonic-comb decay rate (8/pi^2) sum_l (2l+1)^-2 S((2l+1) omega).

    l_max = 0 reduces to the lowest-order estimate S(omega)*8/pi^2.
    """
    if omega <= 0:
        raise ValueError("probe frequency must be positive")
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    odd = 2 * np.arange(l_max + 1) + 1
    return float(8.0 / math.pi**2 * np.sum(nsd_eval(nsd, odd * omega) / odd**2))


def parseval_time(seq, rtol=1e-4):
    """(1/pi) int_0^inf |Y|^2/w^2 dw, which must equal total_time.

    Integrates numerically up to where the analytic mean-value tail
    (sum of squared switching coefficients over pi*w) is small, then
    adds that tail.
    """
    T = seq.total_time
    c_sq = 4.0 * seq.n_pulses + 2.0
    hi = 100.0 * c_sq / T
    pts = _lobe_breakpoints(1e-9, hi, T, cap=1200)
    val, _ = adaptive_gauss_kronrod(
        lambda w: _filter_weight(seq, w), pts, rtol=rtol, max_segments=8000
    )
    return float(val) + c_sq / (math.pi * hi)
