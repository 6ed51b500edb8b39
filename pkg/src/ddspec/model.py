"""Domain types, unit conventions and noise-spectral-density evaluation.

Unit convention
---------------
Internally every time is in microseconds and every frequency is angular,
in rad/us.  Spectral amplitudes (``y0``, ``a``) are decay rates in 1/us.
File and CLI boundaries use ordinary frequency in kHz, magnetic field in
Gauss and rates in 1/ms; conversion happens only in the (de)serialization
helpers in this module.  The Gaussian peak parameters ``nu_l_khz`` and
``sigma_khz`` are kept in ordinary kHz because that is how they are
quoted everywhere at the boundary.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

TWO_PI = 2.0 * math.pi

#: Default 13C gyromagnetic ratio in kHz/G (ordinary frequency per Gauss).
DEFAULT_GAMMA_C_KHZ_PER_G = 1.0705


def khz_to_rad_us(nu_khz):
    """Ordinary kHz -> angular rad/us."""
    return TWO_PI * 1e-3 * np.asarray(nu_khz, dtype=float)


def rad_us_to_khz(omega):
    """Angular rad/us -> ordinary kHz."""
    return 1e3 * np.asarray(omega, dtype=float) / TWO_PI


def rate_per_ms_to_per_us(r):
    return 1e-3 * np.asarray(r, dtype=float)


def rate_per_us_to_per_ms(r):
    return 1e3 * np.asarray(r, dtype=float)


def larmor(b_field, gamma_c_khz_per_g=DEFAULT_GAMMA_C_KHZ_PER_G):
    """Nuclear Larmor frequency in rad/us for a bias field in Gauss."""
    if b_field <= 0:
        raise ValueError(f"bias field must be positive, got {b_field}")
    return TWO_PI * 1e-3 * gamma_c_khz_per_g * b_field


@dataclass(frozen=True)
class GaussianNSD:
    """Gaussian noise spectral density S(nu) = y0 + a*exp(-(nu-nu_l)^2/(2 sigma^2)).

    ``y0`` and ``a`` are rates in 1/us; ``nu_l_khz`` and ``sigma_khz`` are
    ordinary frequencies in kHz.
    """

    y0: float
    a: float
    nu_l_khz: float
    sigma_khz: float

    def __post_init__(self):
        if self.y0 < 0 or self.a < 0:
            raise ValueError("spectral amplitudes must be non-negative")
        if self.sigma_khz <= 0:
            raise ValueError("sigma must be positive")
        if self.nu_l_khz <= 0:
            raise ValueError("peak center must be positive")

    @property
    def omega_peak(self):
        """Peak center in rad/us."""
        return float(khz_to_rad_us(self.nu_l_khz))


@dataclass(frozen=True)
class TabulatedNSD:
    """Piecewise-linear S(omega) given as (omega [rad/us], s [1/us]) samples.

    Linear interpolation between samples; clamped to the end values
    outside the sampled range.
    """

    omegas: tuple
    values: tuple

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        s = np.asarray(self.values, dtype=float)
        if om.ndim != 1 or om.shape != s.shape or len(om) < 2:
            raise ValueError("need matching 1-d sample arrays with >= 2 points")
        if np.any(np.diff(om) <= 0):
            raise ValueError("sample frequencies must be strictly increasing")
        if np.any(s < 0):
            raise ValueError("spectral values must be non-negative")
        object.__setattr__(self, "omegas", tuple(float(x) for x in om))
        object.__setattr__(self, "values", tuple(float(x) for x in s))


def nsd_eval(nsd, omega):
    """Evaluate S at angular frequency `omega` (rad/us); returns 1/us.

    Accepts scalars or arrays.
    """
    scalar = np.isscalar(omega)
    w = np.atleast_1d(np.asarray(omega, dtype=float))
    if isinstance(nsd, GaussianNSD):
        nu = rad_us_to_khz(w)
        out = nsd.y0 + nsd.a * np.exp(-((nu - nsd.nu_l_khz) ** 2) / (2.0 * nsd.sigma_khz**2))
    elif isinstance(nsd, TabulatedNSD):
        out = np.interp(w, nsd.omegas, nsd.values)
    else:
        raise TypeError(f"unsupported NSD type: {type(nsd).__name__}")
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class NuclearCoupling:
    """Hyperfine coupling of one resolved nucleus, in rad/us.

    ``omega_par`` is signed; the phase of the transverse component is
    unobservable in the modulation, so ``omega_perp`` >= 0.
    """

    omega_par: float
    omega_perp: float

    def __post_init__(self):
        if self.omega_perp < 0:
            raise ValueError("transverse coupling must be non-negative")


@dataclass(frozen=True)
class EnvironmentModel:
    """Bias field, collective-bath NSD and resolved nuclei."""

    b_field: float
    nsd: object
    nuclei: tuple = ()
    ms: int = -1
    gamma_c_khz_per_g: float = DEFAULT_GAMMA_C_KHZ_PER_G

    def __post_init__(self):
        if self.b_field <= 0:
            raise ValueError("bias field must be positive")
        if self.ms not in (-1, 1):
            raise ValueError("ms must be -1 or +1")
        object.__setattr__(self, "nuclei", tuple(self.nuclei))

    @property
    def omega_l(self):
        """Bath Larmor frequency in rad/us."""
        return larmor(self.b_field, self.gamma_c_khz_per_g)

    def with_nsd(self, nsd):
        return replace(self, nsd=nsd)


@dataclass(frozen=True)
class TraceRecord:
    n: int
    total_time: float
    p: float
    sigma_p: float

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("pulse count must be non-negative")
        if self.sigma_p <= 0:
            raise ValueError("sigma_p must be positive")


@dataclass(frozen=True)
class CoherenceTrace:
    """Coherence records for one sequence family.

    For equidistant families (cpmg, xy8) ``t1`` is the half interpulse
    spacing and total_time = 2*n*t1 for every record.
    """

    family: str
    records: tuple
    t1: float | None = None

    _EQUIDISTANT = ("cpmg", "xy8")

    def __post_init__(self):
        recs = tuple(self.records)
        if not recs:
            raise ValueError("trace needs at least one record")
        if self.family in self._EQUIDISTANT:
            if self.t1 is None or self.t1 <= 0:
                raise ValueError("equidistant trace needs t1 > 0")
            for r in recs:
                expect = 2.0 * r.n * self.t1
                if r.n > 0 and abs(r.total_time - expect) > 1e-9 * max(expect, 1.0):
                    raise ValueError(
                        f"record n={r.n}: total_time {r.total_time} != 2*n*t1 = {expect}"
                    )
        object.__setattr__(self, "records", recs)

    @property
    def n(self):
        return np.array([r.n for r in self.records])

    @property
    def total_time(self):
        return np.array([r.total_time for r in self.records])

    @property
    def p(self):
        return np.array([r.p for r in self.records])

    @property
    def sigma_p(self):
        return np.array([r.sigma_p for r in self.records])


@dataclass(frozen=True)
class RatePoint:
    """One (probe frequency, decay rate) point of the harmonic-scan method."""

    omega: float
    rate: float
    rate_err: float
    harmonic_hint: int = 0

    def __post_init__(self):
        if self.omega <= 0:
            raise ValueError("probe frequency must be positive")
        if self.rate < 0:
            raise ValueError("rate must be non-negative")
        if self.rate_err <= 0:
            raise ValueError("rate_err must be positive")
        if self.harmonic_hint is None:
            object.__setattr__(self, "harmonic_hint", 0)
        elif self.harmonic_hint < 0:
            raise ValueError("harmonic_hint must be >= 0")


# ---------------------------------------------------------------------------
# JSON boundary (kHz / Gauss / 1-per-ms units)

def nsd_to_dict(nsd):
    if isinstance(nsd, GaussianNSD):
        return {
            "type": "gaussian",
            "y0": float(rate_per_us_to_per_ms(nsd.y0)),
            "a": float(rate_per_us_to_per_ms(nsd.a)),
            "nu_l_khz": nsd.nu_l_khz,
            "sigma_khz": nsd.sigma_khz,
        }
    if isinstance(nsd, TabulatedNSD):
        return {
            "type": "tabulated",
            "nu_khz": [float(x) for x in rad_us_to_khz(np.array(nsd.omegas))],
            "s": [float(x) for x in rate_per_us_to_per_ms(np.array(nsd.values))],
        }
    raise TypeError(f"unsupported NSD type: {type(nsd).__name__}")


def nsd_from_dict(d):
    kind = d.get("type")
    if kind == "gaussian":
        return GaussianNSD(
            y0=float(rate_per_ms_to_per_us(d["y0"])),
            a=float(rate_per_ms_to_per_us(d["a"])),
            nu_l_khz=float(d["nu_l_khz"]),
            sigma_khz=float(d["sigma_khz"]),
        )
    if kind == "tabulated":
        return TabulatedNSD(
            omegas=tuple(khz_to_rad_us(np.asarray(d["nu_khz"], dtype=float))),
            values=tuple(rate_per_ms_to_per_us(np.asarray(d["s"], dtype=float))),
        )
    raise ValueError(f"unknown NSD type: {kind!r}")


def environment_to_dict(env):
    return {
        "b_field_gauss": env.b_field,
        "gamma_c_khz_per_g": env.gamma_c_khz_per_g,
        "ms": env.ms,
        "nsd": nsd_to_dict(env.nsd),
        "nuclei": [
            {
                "omega_par_khz": float(rad_us_to_khz(c.omega_par)),
                "omega_perp_khz": float(rad_us_to_khz(c.omega_perp)),
            }
            for c in env.nuclei
        ],
    }


def environment_from_dict(d):
    try:
        nuclei = tuple(
            NuclearCoupling(
                omega_par=float(khz_to_rad_us(c["omega_par_khz"])),
                omega_perp=float(khz_to_rad_us(c["omega_perp_khz"])),
            )
            for c in d.get("nuclei", [])
        )
        return EnvironmentModel(
            b_field=float(d["b_field_gauss"]),
            gamma_c_khz_per_g=float(d.get("gamma_c_khz_per_g", DEFAULT_GAMMA_C_KHZ_PER_G)),
            ms=int(d.get("ms", -1)),
            nsd=nsd_from_dict(d["nsd"]),
            nuclei=nuclei,
        )
    except KeyError as exc:
        raise ValueError(f"environment model missing field {exc}") from exc


def environment_to_json(env, **kwargs):
    return json.dumps(environment_to_dict(env), **kwargs)


def environment_from_json(text):
    return environment_from_dict(json.loads(text))
