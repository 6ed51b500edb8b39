"""Coherent modulation of the probe by resolved nuclear spins.

Two routes to the same quantity: an exact conditional-propagator product
for arbitrary pulse patterns, and the closed-form expression valid for
an even number of equidistant pulses.  Spin operators are I = sigma/2,
so the free nuclear Hamiltonian is omega_l * I_z; this places the
coherence collapses at probe frequency pi/(2 t1) = omega_l.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _backend

#: Below this |phi| the Dirichlet ratio sin^2(n phi/2)/sin^2(phi/2) is
#: evaluated by its n^2 limit with the second-order correction.
_PHI_GUARD = 1e-6


@dataclass(frozen=True)
class ConditionalHamiltonians:
    """2x2 generators of the nuclear evolution for probe states 0 and 1."""

    h0: np.ndarray
    h1: np.ndarray

    @classmethod
    def build(cls, coupling, omega_l, ms):
        sz = np.array([[0.5, 0.0], [0.0, -0.5]])
        sx = np.array([[0.0, 0.5], [0.5, 0.0]])
        h0 = omega_l * sz
        h1 = (ms * coupling.omega_par + omega_l) * sz + ms * coupling.omega_perp * sx
        return cls(h0=h0, h1=h1)


def conditional_modulation(seq, coupling, omega_l, ms=-1):
    """Re Tr(U0 U1^dag)/2 from the exact conditional propagators.

    U0 alternates exp(-i H0 tau) / exp(-i H1 tau) over the free intervals
    starting with H0; U1 swaps the roles.  Normalized so M = 1 at zero
    coupling; |M| <= 1 always.
    """
    return float(
        _backend.conditional_mod(
            seq.boundaries, coupling.omega_par, coupling.omega_perp, omega_l, float(ms)
        )
    )


def modulation_batch(seq, couplings, omega_l, ms=-1):
    """conditional_modulation over many couplings, one pulse pattern."""
    wpar = np.array([c.omega_par for c in couplings])
    wperp = np.array([c.omega_perp for c in couplings])
    return _backend.conditional_mod_batch(seq.boundaries, wpar, wperp, omega_l, float(ms))


def _omega1(coupling, omega_l, ms):
    return math.hypot(ms * coupling.omega_par + omega_l, coupling.omega_perp)


def _cos_phi(coupling, omega_l, t1, ms):
    w1 = _omega1(coupling, omega_l, ms)
    wz = ms * coupling.omega_par + omega_l
    return (wz / w1) * math.sin(w1 * t1) * math.sin(omega_l * t1) - math.cos(
        w1 * t1
    ) * math.cos(omega_l * t1)


def _dirichlet_sq(n, phi):
    """sin^2(n phi/2) / sin^2(phi/2) with the small-phi limit guarded."""
    if abs(phi) < _PHI_GUARD:
        return n * n * (1.0 - (n * n - 1.0) * phi * phi / 12.0)
    return (math.sin(0.5 * n * phi) / math.sin(0.5 * phi)) ** 2


def analytic_modulation(n, t1, coupling, omega_l, ms=-1):
    """Closed-form M for an even number n of equidistant pulses."""
    if n < 2 or n % 2:
        raise ValueError(f"closed form needs an even pulse count >= 2, got {n}")
    w1 = _omega1(coupling, omega_l, ms)
    if w1 == 0.0:
        return 1.0
    pre = (
        2.0
        * (coupling.omega_perp / w1) ** 2
        * math.sin(0.5 * w1 * t1) ** 2
        * math.sin(0.5 * omega_l * t1) ** 2
    )
    if pre == 0.0:
        return 1.0
    cp = _cos_phi(coupling, omega_l, t1, ms)
    cp = min(1.0, max(-1.0, cp))
    phi = math.acos(cp)
    return 1.0 - pre * _dirichlet_sq(n, phi)


def modulation_amplitude(coupling, omega_l, t1, ms=-1):
    """Envelope of 1 - M over the pulse number, clipped to [0, 2].

    Uses sin^2(n phi/2) <= 1 in the closed form, i.e. the largest dip the
    nucleus can imprint at this interpulse spacing.
    """
    if t1 <= 0:
        raise ValueError("t1 must be positive")
    w1 = _omega1(coupling, omega_l, ms)
    if w1 == 0.0 or coupling.omega_perp == 0.0:
        return 0.0
    pre = (
        2.0
        * (coupling.omega_perp / w1) ** 2
        * math.sin(0.5 * w1 * t1) ** 2
        * math.sin(0.5 * omega_l * t1) ** 2
    )
    cp = min(1.0, max(-1.0, _cos_phi(coupling, omega_l, t1, ms)))
    s2 = 0.5 * (1.0 - cp)  # sin^2(phi/2)
    if s2 < 1e-300:
        # phi -> 0: the dip keeps deepening with n until the clip
        return 2.0
    return min(pre / s2, 2.0)
