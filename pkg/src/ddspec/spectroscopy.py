"""Inverse problem: spectral-density reconstruction and coupling fits.

Method 1 measures the generalized coherence time T2L at many interpulse
spacings, turns each into a decay rate, and fits the harmonic-comb rate
model through the resulting (omega, rate) cloud.  Method 2 skips the
per-spacing reduction and fits the full forward model to several traces
at once.  Resolved nuclei are located from modulation-amplitude scans
and refined by fitting the closed-form modulation to a coherence trace.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import filters, forward, nuclei, sequences
from .model import (
    GaussianNSD,
    NuclearCoupling,
    RatePoint,
    khz_to_rad_us,
    rad_us_to_khz,
)

#: Coherence amplitudes below this are dropped from the T2L log-linear
#: regime (the exponential model is meaningless at the noise floor).
W_FLOOR = 0.05

_LSQ_OPTS = dict(xtol=1e-8, ftol=1e-10, gtol=1e-10, max_nfev=500 * 10)


class FitError(RuntimeError):
    """A fit could not be performed or did not converge."""


@dataclass(frozen=True)
class FitResult:
    """Point estimate with covariance for any of the fits here."""

    params: object
    param_names: tuple
    values: np.ndarray
    covariance: np.ndarray
    chi_nu: float
    n_points: int
    warnings: tuple = ()

    @property
    def errors(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


def _covariance(jac):
    """(J^T J)^-1 for unit-weighted residuals, pseudo-inverted if singular."""
    jtj = jac.T @ jac
    try:
        return np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        return np.linalg.pinv(jtj)


def _chi_nu(residuals, n_params):
    dof = max(len(residuals) - n_params, 1)
    return float(np.sum(residuals**2) / dof)


# ---------------------------------------------------------------------------
# Method 1, stage 1: T2L from a fixed-spacing trace

def fit_t2l(trace, n_min=8, w_floor=W_FLOOR, free_amplitude=True):
    """Exponential decay constant of W = 2P - 1 versus total time.

    Returns (t2l_us, err_us).  Records with n < n_min or W below
    `w_floor` are excluded: low pulse numbers still carry coherent
    modulation transients, and near-floor points break the exponential
    model.  With free_amplitude (default) the fit is W = a * exp(-T/T2L),
    absorbing any n-independent coherence offset into a; a pure
    exp(-T/T2L) is available for strictly flat spectra.
    """
    if trace.t1 is None:
        raise FitError("fit_t2l needs a fixed-spacing trace")
    w = 2.0 * trace.p - 1.0
    sw = 2.0 * trace.sigma_p
    keep = (trace.n >= n_min) & (w > w_floor)
    if np.count_nonzero(keep) < 3:
        raise FitError(
            f"need >= 3 usable records with n >= {n_min} and W > {w_floor} "
            f"(have {np.count_nonzero(keep)})"
        )
    t = trace.total_time[keep]
    w, sw = w[keep], sw[keep]

    # log-linear seed
    lw = np.log(w)
    slope, intercept = np.polyfit(t, lw, 1)
    rate0 = max(-slope, 1e-6 / t.max())

    if free_amplitude:
        x0 = np.array([math.log(rate0), min(intercept, 0.0)])

        def resid(x):
            return (np.exp(x[1] - np.exp(x[0]) * t) - w) / sw

    else:
        x0 = np.array([math.log(rate0)])

        def resid(x):
            return (np.exp(-np.exp(x[0]) * t) - w) / sw

    sol = least_squares(resid, x0, **_LSQ_OPTS)
    if not sol.success:
        raise FitError(f"T2L fit did not converge: {sol.message}")
    rate = math.exp(sol.x[0])
    cov = _covariance(sol.jac)
    rate_err = rate * math.sqrt(max(cov[0, 0], 0.0))
    t2l = 1.0 / rate
    return t2l, t2l * rate_err / rate


def trace_rate_point(trace, n_min=8, w_floor=W_FLOOR, harmonic_hint=None):
    """Reduce one trace to a RatePoint at its probe frequency pi/(2 t1)."""
    t2l, err = fit_t2l(trace, n_min=n_min, w_floor=w_floor)
    omega = math.pi / (2.0 * trace.t1)
    rate = 1.0 / t2l
    rate_err = err / t2l**2
    if not rate_err > 0:
        # degenerate covariance (e.g. barely enough points); keep the
        # point but with a conservative weight
        rate_err = 0.05 * rate
    return RatePoint(
        omega=omega,
        rate=rate,
        rate_err=rate_err,
        harmonic_hint=harmonic_hint,
    )


# ---------------------------------------------------------------------------
# scan planning

def plan_scan(nu_l_khz, harmonics, window_khz, points):
    """Interpulse spacings whose (2l+1)-th filter harmonic sweeps the peak.

    Returns [(t1_us, l), ...] such that (2l+1) pi/(2 t1) covers the
    angular band 2 pi (nu_l +- window) for each requested harmonic order.
    """
    if not harmonics:
        raise ValueError("need at least one harmonic order")
    if points < 1:
        raise ValueError("points must be >= 1")
    if window_khz < 0 or nu_l_khz <= window_khz:
        raise ValueError("window must satisfy 0 <= window < nu_l")
    out = []
    for l in sorted(set(int(l) for l in harmonics)):
        if l < 0:
            raise ValueError("harmonic orders are nonnegative")
        if points == 1:
            targets = np.array([nu_l_khz])
        else:
            targets = np.linspace(nu_l_khz - window_khz, nu_l_khz + window_khz, points)
        for nu in targets:
            t1 = (2 * l + 1) * math.pi / (2.0 * khz_to_rad_us(nu))
            out.append((float(t1), l))
    return out


# ---------------------------------------------------------------------------
# Method 1, stage 2: comb fit through rate points

def reconstruct_nsd(rate_points, l_max=2, fixed_nu_l=None, initial=None):
    """Weighted comb-rate fit of a Gaussian NSD through (omega, rate) data.

    Positivity of (y0, A, sigma) is enforced by fitting their logs; the
    center frequency stays linear and may be pinned with `fixed_nu_l`
    (kHz).  Returns a FitResult whose params is the fitted GaussianNSD.
    """
    if len(rate_points) < 5:
        raise FitError(f"need >= 5 rate points, got {len(rate_points)}")
    om = np.array([p.omega for p in rate_points])
    rate = np.array([p.rate for p in rate_points])
    err = np.array([p.rate_err if p.rate_err > 0 else 1.0 for p in rate_points])

    if initial is None:
        # seed: peak near the strongest implied fundamental, modest width
        guess_nu = rad_us_to_khz(om[np.argmax(rate)])
        hints = [p.harmonic_hint for p in rate_points if p.harmonic_hint]
        if hints:
            guess_nu *= 2 * min(hints) + 1
        initial = GaussianNSD(
            y0=0.3 * float(np.min(rate)) + 1e-6,
            a=float(np.max(rate)) * 9.0,
            nu_l_khz=float(guess_nu),
            sigma_khz=0.02 * float(guess_nu),
        )

    fit_center = fixed_nu_l is None
    names = ["y0", "a", "sigma_khz"] + (["nu_l_khz"] if fit_center else [])

    def unpack(x):
        nu = x[3] if fit_center else fixed_nu_l
        # clip the log parameters so a wandering line search cannot
        # overflow exp
        y0, a, sig = np.exp(np.clip(x[:3], -80.0, 80.0))
        return GaussianNSD(
            y0=float(y0), a=float(a), nu_l_khz=float(nu), sigma_khz=float(sig)
        )

    def resid(x):
        nsd = unpack(x)
        model = np.array([filters.comb_rate(nsd, w, l_max=l_max) for w in om])
        return (model - rate) / err

    x0 = [math.log(initial.y0), math.log(initial.a), math.log(initial.sigma_khz)]
    if fit_center:
        x0.append(initial.nu_l_khz)
    sol = least_squares(resid, np.array(x0), **_LSQ_OPTS)
    if not sol.success:
        raise FitError(f"comb fit did not converge: {sol.message}")
    nsd = unpack(sol.x)

    cov_x = _covariance(sol.jac)
    # chain rule back to physical parameters (log-fitted ones scale by value)
    scale = [nsd.y0, nsd.a, nsd.sigma_khz] + ([1.0] if fit_center else [])
    d = np.diag(scale)
    cov = d @ cov_x @ d
    values = np.array(
        [nsd.y0, nsd.a, nsd.sigma_khz] + ([nsd.nu_l_khz] if fit_center else [])
    )
    hints = np.array(
        [p.harmonic_hint if p.harmonic_hint is not None else 0 for p in rate_points]
    )
    targets = om * (2 * hints + 1)
    warnings = ()
    if np.all(targets < nsd.omega_peak) or np.all(targets > nsd.omega_peak):
        warnings = ("rate points all sit on one side of the fitted peak",)
    return FitResult(
        params=nsd, param_names=tuple(names), values=values, covariance=cov,
        chi_nu=_chi_nu(sol.fun, len(x0)), n_points=len(rate_points),
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# resolved nuclei: detection and refinement

def detect_nuclei(amp_points, threshold=0.1, omega_l=None, ms=-1):
    """Initial parallel-coupling guesses from a modulation-amplitude scan.

    `amp_points` is a list of (omega, amplitude) with omega = pi/(2 t1)
    the probe frequency.  The scan is median-smoothed over 3 points and
    local maxima above `threshold` are mapped to omega_par through the
    first-order resonance shift omega_peak ~ omega_l + ms*omega_par/2.
    Returns a list of signed omega_par guesses (rad/us); empty when
    nothing clears the threshold.
    """
    if not len(amp_points):
        raise ValueError("amplitude scan must be nonempty")
    if omega_l is None:
        raise ValueError("detect_nuclei needs the bare Larmor frequency omega_l")
    pts = sorted((float(w), float(a)) for w, a in amp_points)
    om = np.array([p[0] for p in pts])
    amp = np.array([p[1] for p in pts])
    if len(amp) >= 3:
        sm = np.copy(amp)
        sm[1:-1] = np.median(np.column_stack((amp[:-2], amp[1:-1], amp[2:])), axis=1)
    else:
        sm = amp
    guesses = []
    for i in range(1, len(sm) - 1):
        if sm[i] >= threshold and sm[i] >= sm[i - 1] and sm[i] > sm[i + 1]:
            guesses.append(float(ms * 2.0 * (om[i] - omega_l)))
    return guesses


def fit_coupling(trace, initial, env_bath, omega_l, ms=-1, rtol=1e-6):
    """Refine a hyperfine coupling from an even-n fixed-spacing trace.

    Model: P = (1 + e^-chi(n) * M_equi(n; omega_par, omega_perp)) / 2
    with chi precomputed from the stochastic-bath NSD `env_bath` at each
    pulse number.  omega_par keeps its sign, omega_perp >= 0.
    """
    if trace.t1 is None:
        raise FitError("fit_coupling needs a fixed-spacing trace")
    ns = trace.n
    if np.any(ns % 2):
        raise FitError("closed-form modulation needs even pulse numbers")
    t1 = trace.t1
    decay = np.array(
        [
            math.exp(-filters.chi(sequences.equidistant(int(n), t1), env_bath, rtol=rtol))
            for n in ns
        ]
    )

    def model(x):
        c = NuclearCoupling(omega_par=x[0], omega_perp=abs(x[1]))
        mods = np.array(
            [nuclei.analytic_modulation(int(n), t1, c, omega_l, ms=ms) for n in ns]
        )
        return 0.5 * (1.0 + decay * mods)

    def resid(x):
        return (model(x) - trace.p) / trace.sigma_p

    x0 = np.array([initial.omega_par, max(initial.omega_perp, 1e-4 * omega_l)])
    sol = least_squares(resid, x0, diff_step=1e-6, **_LSQ_OPTS)
    if not sol.success:
        raise FitError(f"coupling fit did not converge: {sol.message}")
    coupling = NuclearCoupling(omega_par=float(sol.x[0]), omega_perp=abs(float(sol.x[1])))
    cov = _covariance(sol.jac)
    warnings = ()
    amp = nuclei.modulation_amplitude(coupling, omega_l, t1, ms=ms)
    if amp < 3.0 * float(np.median(trace.sigma_p)):
        warnings = (
            "modulation amplitude below the noise floor at this spacing; "
            "the coupling is effectively unidentifiable here",
        )
    return FitResult(
        params=coupling,
        param_names=("omega_par", "omega_perp"),
        values=np.array([coupling.omega_par, coupling.omega_perp]),
        covariance=cov,
        chi_nu=_chi_nu(sol.fun, 2),
        n_points=len(ns),
        warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Method 2: direct multi-sequence NSD fit

class _RecordModel:
    """Per-record precomputation for the direct fit.

    For a Gaussian NSD with pinned center, chi splits into the exact
    flat-baseline part y0*T plus the peak integral; the filter weight is
    frozen on a dense grid around the peak once, so each solver iteration
    is a dot product.  The fixed nuclei contribute a constant modulation.
    """

    def __init__(self, seq, couplings, omega_l, ms, sigma_span):
        self.total_time = seq.total_time
        self.mod = forward.modulation_product(
            seq,
            _FrozenEnv(couplings, omega_l, ms),
        )
        pk = omega_l
        lo = max(pk - sigma_span, 1e-6)
        hi = pk + sigma_span
        # ~40 samples per filter lobe keeps the trapezoid error well under
        # the shot noise of any realistic trace
        lobes = max(int((hi - lo) * seq.total_time / math.pi), 4)
        grid = np.linspace(lo, hi, min(40 * lobes, 200_000))
        w = filters.filter_y_squared(seq, grid) / (math.pi * grid**2)
        dx = grid[1] - grid[0]
        trap = np.full(len(grid), dx)
        trap[0] = trap[-1] = 0.5 * dx
        self.grid = grid
        self.weight = w * trap

    def chi(self, y0, a, sig, pk):
        peak = float(self.weight @ np.exp(-((self.grid - pk) ** 2) / (2.0 * sig**2)))
        return y0 * self.total_time + a * peak

    def coherence(self, y0, a, sig, pk):
        return 0.5 * (1.0 + math.exp(-self.chi(y0, a, sig, pk)) * self.mod)


class _FrozenEnv:
    """Duck-typed stand-in for EnvironmentModel in modulation_product."""

    def __init__(self, couplings, omega_l, ms):
        self.nuclei = tuple(couplings)
        self.omega_l = omega_l
        self.ms = ms


def fit_nsd_direct(
    traces,
    env_nuclei,
    fixed_nu_l,
    initial=None,
    ms=-1,
    sequences_for=None,
    span_sigma_khz=40.0,
):
    """Simultaneous forward-model fit of (y0, A, sigma) to several traces.

    The peak center is fixed at `fixed_nu_l` (kHz) and the resolved
    nuclei in `env_nuclei` are held at their given couplings.  Each
    record's pulse pattern defaults to equidistant CPMG reconstructed
    from (family, n, t1); pass `sequences_for(trace) -> [PulseSequence]`
    to override.  Returns a FitResult with the fitted GaussianNSD.
    """
    traces = list(traces)
    if len(traces) < 2:
        raise FitError("direct fit needs at least two traces")
    omega_l = khz_to_rad_us(fixed_nu_l)
    # freeze the filter on +-12 x the widest width the solver may visit
    span = 12.0 * khz_to_rad_us(span_sigma_khz)
    models = []
    data_p = []
    data_sp = []
    fams = set()
    spacings = set()
    for tr in traces:
        fams.add(tr.family)
        spacings.add(tr.t1)
        if sequences_for is not None:
            seqs = sequences_for(tr)
        else:
            seqs = [sequences.equidistant(int(r.n), tr.t1, family=tr.family) for r in tr.records]
        for seq, rec in zip(seqs, tr.records):
            models.append(_RecordModel(seq, env_nuclei, omega_l, ms, span))
            data_p.append(rec.p)
            data_sp.append(rec.sigma_p)
    data_p = np.array(data_p)
    data_sp = np.array(data_sp)

    if initial is None:
        initial = GaussianNSD(y0=1e-3, a=0.1, nu_l_khz=fixed_nu_l, sigma_khz=10.0)

    def unpack(x):
        y0, a, sig = np.exp(np.clip(x, -80.0, 80.0))
        return float(y0), float(a), float(khz_to_rad_us(sig))

    def resid(x):
        y0, a, sig = unpack(x)
        sim = np.array([m.coherence(y0, a, sig, omega_l) for m in models])
        return (sim - data_p) / data_sp

    x0 = np.array(
        [math.log(initial.y0), math.log(initial.a), math.log(initial.sigma_khz)]
    )
    # keep sigma inside the frozen filter-weight window; a wider "peak"
    # is indistinguishable from baseline and only destabilizes chi
    lb = np.array([-40.0, -40.0, math.log(0.2)])
    ub = np.array([5.0, 5.0, math.log(span_sigma_khz)])
    x0 = np.clip(x0, lb + 1e-9, ub - 1e-9)
    sol = least_squares(resid, x0, bounds=(lb, ub), **_LSQ_OPTS)
    if not sol.success:
        raise FitError(f"direct NSD fit did not converge: {sol.message}")
    y0, a, sig = unpack(sol.x)
    nsd = GaussianNSD(y0=y0, a=a, nu_l_khz=float(fixed_nu_l), sigma_khz=rad_us_to_khz(sig))
    cov_x = _covariance(sol.jac)
    d = np.diag([nsd.y0, nsd.a, nsd.sigma_khz])
    warnings = ()
    if len(fams) == 1 and len(spacings) == 1:
        warnings = (
            "all traces share one family and spacing; spectral leverage is weak",
        )
    return FitResult(
        params=nsd,
        param_names=("y0", "a", "sigma_khz"),
        values=np.array([nsd.y0, nsd.a, nsd.sigma_khz]),
        covariance=d @ cov_x @ d,
        chi_nu=_chi_nu(sol.fun, 3),
        n_points=len(data_p),
        warnings=warnings,
    )
