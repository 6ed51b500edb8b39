"""Predictive-power scoring: reduced chi-squared and two-model reports.

A single environment model is scored by the mean squared residual
between simulated and measured coherence, weighted by the measurement
errors.  The two-model report splits traces into a low-pulse-number and
a high-pulse-number group and scores each group under both candidate
models, plus the combined assignment (model 1 on the low group, model 2
on the high group) that the strong-coupling regime calls for.
"""
from __future__ import annotations

import numpy as np

from . import forward, sequences

#: Default group split: n < LOW_N_MAX is "low-n", n >= HIGH_N_MIN "high-n";
#: records in between belong to neither group.
LOW_N_MAX = 8
HIGH_N_MIN = 20


def chi_nu_squared(sim, data):
    """(1/(N-1)) sum (s_i - y_i)^2 / delta_i^2."""
    sim = np.asarray(sim, dtype=float)
    if len(sim) != len(data):
        raise ValueError(f"length mismatch: {len(sim)} simulations, {len(data)} data")
    if len(sim) < 2:
        raise ValueError("need at least 2 points")
    y = np.array([d[0] for d in data], dtype=float)
    delta = np.array([d[1] for d in data], dtype=float)
    if np.any(delta <= 0):
        raise ValueError("all measurement errors must be positive")
    return float(np.sum(((sim - y) / delta) ** 2) / (len(sim) - 1))


def _simulate_trace(trace, env, rtol=1e-6):
    return [
        forward.coherence(sequences.equidistant(int(r.n), trace.t1, family=trace.family), env, rtol=rtol)
        for r in trace.records
    ]


def _score(traces, env, rtol=1e-6):
    """Pooled chi^2_nu of one model over a list of traces."""
    sim, data = [], []
    for tr in traces:
        sim.extend(_simulate_trace(tr, env, rtol=rtol))
        data.extend((r.p, r.sigma_p) for r in tr.records)
    return chi_nu_squared(sim, data)


def split_traces(traces, low_n_max=LOW_N_MAX, high_n_min=HIGH_N_MIN):
    """Partition records into low-n and high-n trace groups."""
    low, high = [], []
    for tr in traces:
        lo = [r for r in tr.records if r.n < low_n_max]
        hi = [r for r in tr.records if r.n >= high_n_min]
        if lo:
            low.append(tr.__class__(family=tr.family, records=tuple(lo), t1=tr.t1))
        if hi:
            high.append(tr.__class__(family=tr.family, records=tuple(hi), t1=tr.t1))
    return low, high


def regime_report(env_m1, env_m2, traces, low_n_max=LOW_N_MAX, high_n_min=HIGH_N_MIN, rtol=1e-6):
    """Per-group scores of two candidate models plus their combination.

    Model 1 is the low-pulse-number (echo-like) characterization, model 2
    the high-pulse-number one.  The combined score applies each model to
    the group it was built from; a bath with back-action shows up as
    model 1 failing the high-n group while the combination stays good.
    """
    if env_m1.nuclei != env_m2.nuclei:
        raise ValueError("the two models must share the resolved nuclei")
    if abs(env_m1.omega_l - env_m2.omega_l) > 1e-9:
        raise ValueError("the two models must share the Larmor frequency")
    low, high = split_traces(traces, low_n_max=low_n_max, high_n_min=high_n_min)
    if not low and not high:
        raise ValueError("no records fall into either pulse-number group")

    def group_scores(group):
        if not group:
            return None
        return {
            "n_points": int(sum(len(t.records) for t in group)),
            "chi_nu_m1": _score(group, env_m1, rtol=rtol),
            "chi_nu_m2": _score(group, env_m2, rtol=rtol),
        }

    report = {
        "groups": {
            "low_n": group_scores(low),
            "high_n": group_scores(high),
        },
        "split": {"low_n_max": low_n_max, "high_n_min": high_n_min},
    }
    # combined: each model on its own regime, pooled over all records
    sim, data = [], []
    for group, env in ((low, env_m1), (high, env_m2)):
        for tr in group:
            sim.extend(_simulate_trace(tr, env, rtol=rtol))
            data.extend((r.p, r.sigma_p) for r in tr.records)
    report["combined_chi_nu"] = chi_nu_squared(sim, data) if len(sim) >= 2 else None
    return report


def format_report(report):
    """Human-readable table for a regime_report dict."""
    lines = ["group    points  chi2_nu(M1)  chi2_nu(M2)"]
    for name in ("low_n", "high_n"):
        g = report["groups"][name]
        if g is None:
            lines.append(f"{name:<8} (empty)")
        else:
            lines.append(
                f"{name:<8} {g['n_points']:>6}  {g['chi_nu_m1']:>11.3f}  {g['chi_nu_m2']:>11.3f}"
            )
    comb = report["combined_chi_nu"]
    if comb is not None:
        lines.append(f"combined (M1 on low-n, M2 on high-n): {comb:.3f}")
    return "\n".join(lines)
