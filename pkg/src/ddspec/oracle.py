"""Exact few-spin quantum-bath simulation and its analytic weak-coupling limit.

The bath is a set of non-interacting spin-1/2 members, each precessing at
the shared internal frequency omega0 and coupled to the probe through
(omega_par, omega_perp).  Because the bath factorizes, the exact survival
probability is a product of single-spin conditional modulations — no
2^N Hilbert space is ever built, so thousands of spins are cheap.

The average-Hamiltonian (second-order Magnus) closed forms predict the
same probability when omega_perp / omega0 is small; comparing the two is
the certificate for when a classical spectral-density model of the bath
is predictive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import nuclei, sequences
from .model import NuclearCoupling, TabulatedNSD

#: |cos(T omega0 / 2)| below this is treated as the filter resonance,
#: where the closed-form exponent diverges.
_RESONANCE_GUARD = 1e-8


class ResonanceSingularityError(ValueError):
    """Closed-form CPMG exponent evaluated at its cosine pole."""


@dataclass(frozen=True)
class SpinBath:
    """Non-interacting spin-1/2 bath with shared internal frequency."""

    spins: tuple
    omega0: float
    rng_seed: int | None = None

    def __post_init__(self):
        if not self.spins:
            raise ValueError("bath must contain at least one spin")
        if self.omega0 <= 0:
            raise ValueError("omega0 must be positive")
        object.__setattr__(self, "spins", tuple(self.spins))

    @property
    def perp_sq(self):
        return np.array([s.omega_perp**2 for s in self.spins])

    @property
    def par_sq(self):
        return np.array([s.omega_par**2 for s in self.spins])


def random_bath(n_spins, ratio, omega0, rng_seed=0, par_ratio=0.0):
    """Seeded bath with typical coupling ratio R = omega_perp / omega0.

    omega_perp is half-normal with scale ratio*omega0 (all >= 0);
    omega_par is normal with scale par_ratio*omega0.
    """
    if n_spins < 1:
        raise ValueError("n_spins must be >= 1")
    if ratio < 0 or par_ratio < 0:
        raise ValueError("coupling ratios must be nonnegative")
    rng = np.random.default_rng(rng_seed)
    perp = np.abs(rng.normal(0.0, ratio * omega0, n_spins))
    par = rng.normal(0.0, par_ratio * omega0, n_spins) if par_ratio else np.zeros(n_spins)
    spins = tuple(
        NuclearCoupling(omega_par=float(p), omega_perp=float(q)) for p, q in zip(par, perp)
    )
    return SpinBath(spins=spins, omega0=float(omega0), rng_seed=rng_seed)


def exact_coherence(seq, bath, ms=-1):
    """P = (1 + prod_k M_k)/2 from the exact conditional propagators."""
    mods = nuclei.modulation_batch(seq, bath.spins, bath.omega0, ms)
    return 0.5 * (1.0 + float(np.prod(mods)))


def magnus_ramsey(bath, total_time):
    """Free-evolution survival probability in the average-Hamiltonian limit.

    Static part: Gaussian decay from the parallel couplings.  Stochastic
    part: the transverse couplings sampled at the bath frequency.
    """
    if total_time < 0:
        raise ValueError("total_time must be >= 0")
    t = float(total_time)
    w0 = bath.omega0
    static = math.exp(-0.5 * t * t * float(np.sum(bath.par_sq)))
    stoch = math.exp(
        -2.0 * float(np.sum(bath.perp_sq)) * math.sin(0.5 * w0 * t) ** 2 / w0**2
    )
    return 0.5 + 0.5 * static * stoch


def magnus_cpmg(bath, n_cycles, cycle_time):
    """Equidistant-sequence survival probability, average-Hamiltonian limit.

    `cycle_time` is the duration T of one cycle (one pi pulse at its
    center), so the sequence runs for n_cycles * T in total and matches
    sequences.equidistant(n_cycles, T/2).  The parallel couplings are
    refocused and drop out; the exponent is

        2 sum_k w_perp^2 sin^4(T w0/4) g^2(n T w0/2) / (w0^2 cos^2(T w0/2))

    with g = sin for an even number of cycles and g = cos for an odd one
    (the echo limit n = 1 fixes the parity).  This is the small-coupling
    expansion of the exact propagator product (exact_coherence is the
    fallback at the cosine pole).
    """
    if n_cycles < 1 or int(n_cycles) != n_cycles:
        raise ValueError(f"n_cycles must be a positive integer, got {n_cycles}")
    if cycle_time <= 0:
        raise ValueError("cycle_time must be positive")
    w0 = bath.omega0
    x = cycle_time * w0
    c = math.cos(0.5 * x)
    if abs(c) < _RESONANCE_GUARD:
        raise ResonanceSingularityError(
            f"cycle_time*omega0 = {x:g} sits on the filter resonance "
            "(odd multiple of pi); use exact_coherence instead"
        )
    g = math.sin if n_cycles % 2 == 0 else math.cos
    exponent = (
        2.0
        * float(np.sum(bath.perp_sq))
        * math.sin(0.25 * x) ** 4
        * g(0.5 * n_cycles * x) ** 2
        / (w0**2 * c**2)
    )
    return 0.5 + 0.5 * math.exp(-exponent)


def equivalent_classical_nsd(bath, epsilon=None, n_points=801, calibrated=True):
    """Classical surrogate of the bath: (TabulatedNSD, static variance).

    The stochastic part of the surrogate is a delta spectrum at omega0
    carrying the summed squared transverse couplings, here approximated
    by a Gaussian of width epsilon (default omega0/200) tabulated over
    +-8 epsilon.  The static part is the variance sum_k omega_par^2.

    With calibrated=True (default) the integrated weight is scaled by
    pi/8 so that chi = integral S |Y|^2 / (pi w^2) reproduces the
    average-Hamiltonian decay exponent as epsilon -> 0.  With
    calibrated=False the weight is literally sum_k omega_perp^2.
    """
    w0 = bath.omega0
    if epsilon is None:
        epsilon = w0 / 200.0
    if not 0 < epsilon < w0 / 8.0:
        raise ValueError("epsilon must be positive and << omega0")
    weight = float(np.sum(bath.perp_sq))
    if calibrated:
        weight *= math.pi / 8.0
    om = np.linspace(w0 - 8.0 * epsilon, w0 + 8.0 * epsilon, n_points)
    vals = weight / (math.sqrt(2.0 * math.pi) * epsilon) * np.exp(
        -((om - w0) ** 2) / (2.0 * epsilon**2)
    )
    static_variance = float(np.sum(bath.par_sq))
    return TabulatedNSD(omegas=tuple(om), values=tuple(vals)), static_variance


def sweep(bath, n_pulses, cycle_times, ms=-1):
    """(T_total, P_exact, P_magnus) rows over a cycle-time sweep.

    P_magnus is NaN at resonance points, where the closed form diverges.
    """
    rows = []
    for ct in cycle_times:
        seq = sequences.equidistant(n_pulses, 0.5 * ct)
        p_exact = exact_coherence(seq, bath, ms=ms)
        try:
            p_magnus = magnus_cpmg(bath, n_pulses, ct)
        except ResonanceSingularityError:
            p_magnus = float("nan")
        rows.append((seq.total_time, p_exact, p_magnus))
    return rows
