"""Coherence simulation and noise spectroscopy for a pulsed spin probe.

Forward model: filter-function dephasing from a classical noise spectral
density plus coherent modulation by resolved nuclear spins.  Inverse
tools reconstruct the spectral density (harmonic-comb and direct
multi-sequence fits) and hyperfine couplings, with an exact few-spin
quantum-bath oracle to certify when the classical picture is predictive.

Hot kernels (filter function, conditional propagators) run on a compiled
backend when available; set DDSPEC_PURE_PYTHON=1 to force the pure-Python
fallback.
"""

__version__ = "1.0.0"

from ._backend import BACKEND
from .model import (
    CoherenceTrace,
    EnvironmentModel,
    GaussianNSD,
    NuclearCoupling,
    RatePoint,
    TabulatedNSD,
    TraceRecord,
    environment_from_dict,
    environment_from_json,
    environment_to_dict,
    environment_to_json,
    khz_to_rad_us,
    larmor,
    nsd_eval,
    rad_us_to_khz,
)
from .sequences import PulseSequence, axy, custom, equidistant, udd
from .filters import chi, comb_rate, filter_y_squared, parseval_time, IntegrationError
from .nuclei import analytic_modulation, conditional_modulation, modulation_amplitude
from .forward import coherence, decay_dataset, sweep_coherence, trace_from_csv, trace_to_csv
from .oracle import (
    ResonanceSingularityError,
    SpinBath,
    equivalent_classical_nsd,
    exact_coherence,
    magnus_cpmg,
    magnus_ramsey,
    random_bath,
)
from .spectroscopy import (
    FitError,
    FitResult,
    detect_nuclei,
    fit_coupling,
    fit_nsd_direct,
    fit_t2l,
    plan_scan,
    reconstruct_nsd,
    trace_rate_point,
)
from .evaluate import chi_nu_squared, regime_report

__all__ = [
    "BACKEND",
    "CoherenceTrace",
    "EnvironmentModel",
    "FitError",
    "FitResult",
    "GaussianNSD",
    "IntegrationError",
    "NuclearCoupling",
    "PulseSequence",
    "RatePoint",
    "ResonanceSingularityError",
    "SpinBath",
    "TabulatedNSD",
    "TraceRecord",
    "analytic_modulation",
    "axy",
    "chi",
    "chi_nu_squared",
    "coherence",
    "comb_rate",
    "conditional_modulation",
    "custom",
    "decay_dataset",
    "detect_nuclei",
    "environment_from_dict",
    "environment_from_json",
    "environment_to_dict",
    "environment_to_json",
    "equidistant",
    "equivalent_classical_nsd",
    "exact_coherence",
    "filter_y_squared",
    "fit_coupling",
    "fit_nsd_direct",
    "fit_t2l",
    "khz_to_rad_us",
    "larmor",
    "magnus_cpmg",
    "magnus_ramsey",
    "modulation_amplitude",
    "nsd_eval",
    "parseval_time",
    "plan_scan",
    "rad_us_to_khz",
    "random_bath",
    "reconstruct_nsd",
    "regime_report",
    "sweep_coherence",
    "trace_from_csv",
    "trace_rate_point",
    "trace_to_csv",
    "udd",
]
