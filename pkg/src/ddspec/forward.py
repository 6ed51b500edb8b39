"""Composite forward model and synthetic dataset generation.

Residual coherence after a pulse sequence combines the stochastic bath
(exponential of the filter overlap) with the coherent modulation of each
resolved nucleus: P = (1 + e^-chi * prod_i M_i) / 2.
"""
from __future__ import annotations

import io

import numpy as np

from . import filters, nuclei, sequences
from .model import CoherenceTrace, TraceRecord

_TRACE_HEADER = "family,t1_us,n,total_time_us,p,sigma_p"


def modulation_product(seq, env):
    """Product of the conditional modulations of all resolved nuclei."""
    if not env.nuclei:
        return 1.0
    return float(np.prod(nuclei.modulation_batch(seq, env.nuclei, env.omega_l, env.ms)))


def coherence(seq, env, rtol=1e-6):
    """P in [0, 1] for one sequence under the environment model."""
    c = filters.chi(seq, env.nsd, rtol=rtol)
    return 0.5 * (1.0 + np.exp(-c) * modulation_product(seq, env))


def decay_dataset(t1, n_list, env, family="cpmg", shot_sigma=None, rng_seed=0, rtol=1e-6):
    """Simulated coherence-vs-n trace at fixed interpulse spacing.

    With `shot_sigma` set, adds i.i.d. Gaussian noise of that standard
    deviation to every P and records it as sigma_p; P is deliberately not
    clipped afterwards so chi-squared statistics stay unbiased.  Without
    it, sigma_p falls back to a nominal 1e-3 so weighted fits stay
    defined.
    """
    if not len(n_list):
        raise ValueError("n_list must be nonempty")
    rng = np.random.default_rng(rng_seed)
    records = []
    for n in n_list:
        seq = sequences.equidistant(int(n), t1, family=family)
        p = coherence(seq, env, rtol=rtol)
        if shot_sigma:
            p += rng.normal(0.0, shot_sigma)
            sp = shot_sigma
        else:
            sp = 1e-3
        records.append(TraceRecord(n=int(n), total_time=seq.total_time, p=float(p), sigma_p=sp))
    return CoherenceTrace(family=family, t1=float(t1), records=tuple(records))


def sweep_coherence(seq_family, param_grid, env, rtol=1e-6):
    """Coherence over a parameter grid; returns [(params, P), ...].

    Each grid entry is a dict of builder arguments for `seq_family`
    (e.g. {"n": 32, "t1": 0.3} for cpmg/xy8, {"n": 32, "total_time": 40}
    for udd, {"n_blocks": 8, "r_m": 0.5, "total_time": 40} for axy,
    {"times": [...], "total_time": 10} for custom).
    """
    out = []
    for params in param_grid:
        seq = build_sequence(seq_family, **params)
        out.append((dict(params), coherence(seq, env, rtol=rtol)))
    return out


def build_sequence(family, **params):
    if family in ("cpmg", "xy8"):
        return sequences.equidistant(params["n"], params["t1"], family=family)
    if family == "udd":
        return sequences.udd(params["n"], params["total_time"])
    if family == "axy":
        return sequences.axy(params["n_blocks"], params["r_m"], params["total_time"])
    if family == "custom":
        return sequences.custom(params.get("times", []), params["total_time"])
    raise ValueError(f"unknown sequence family: {family!r}")


# ---------------------------------------------------------------------------
# trace CSV I/O: header `family,t1_us,n,total_time_us,p,sigma_p`, one
# record per row; lines starting with '#' are provenance comments.

def trace_to_csv(trace, comments=()):
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(_TRACE_HEADER + "\n")
    t1 = "" if trace.t1 is None else repr(trace.t1)
    for r in trace.records:
        buf.write(f"{trace.family},{t1},{r.n},{r.total_time!r},{r.p!r},{r.sigma_p!r}\n")
    return buf.getvalue()


def trace_from_csv(text):
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines or lines[0].strip() != _TRACE_HEADER:
        raise ValueError(f"expected trace header {_TRACE_HEADER!r}")
    family = None
    t1 = None
    records = []
    for i, ln in enumerate(lines[1:], start=2):
        parts = ln.split(",")
        if len(parts) != 6:
            raise ValueError(f"line {i}: expected 6 fields, got {len(parts)}")
        fam, t1s, n, tt, p, sp = parts
        if family is None:
            family = fam
            t1 = float(t1s) if t1s else None
        elif fam != family:
            raise ValueError(f"line {i}: mixed families {family!r} and {fam!r}")
        records.append(
            TraceRecord(n=int(n), total_time=float(tt), p=float(p), sigma_p=float(sp))
        )
    return CoherenceTrace(family=family, t1=t1, records=tuple(records))
