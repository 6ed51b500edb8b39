"""Pulse-time construction for every decoupling family used here.

Pulses are ideal instantaneous pi rotations; phases are kept as metadata
only (the conditional-propagator coherence and the filter function are
phase-independent for ideal pulses).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

#: Smallest accepted block-compression factor for the adaptive family;
#: r_m = 0 would make the five pulses of a block coincide.
MIN_R_M = 1e-6

_XY8_PHASES = (0.0, math.pi / 2, 0.0, math.pi / 2, math.pi / 2, 0.0, math.pi / 2, 0.0)


@dataclass(frozen=True)
class PulseSequence:
    """Ordered pi-pulse times on (0, total_time)."""

    total_time: float
    pulse_times: tuple
    family: str = "custom"
    phases: tuple | None = None
    params: tuple = ()

    def __post_init__(self):
        if self.total_time <= 0:
            raise ValueError("total_time must be positive")
        times = tuple(float(t) for t in self.pulse_times)
        if times:
            if times[0] <= 0:
                raise ValueError("first pulse must be strictly after t = 0")
            if times[-1] >= self.total_time:
                raise ValueError("last pulse must be strictly before total_time")
            if any(b <= a for a, b in zip(times, times[1:])):
                raise ValueError("pulse times must be strictly increasing")
        if self.phases is not None and len(self.phases) != len(times):
            raise ValueError("need one phase per pulse")
        object.__setattr__(self, "pulse_times", times)
        if self.phases is not None:
            object.__setattr__(self, "phases", tuple(float(p) for p in self.phases))
        object.__setattr__(self, "params", tuple(self.params))

    @property
    def n_pulses(self):
        return len(self.pulse_times)

    @property
    def boundaries(self):
        """[0, t_1, ..., t_n, T] as an ndarray."""
        return np.concatenate(([0.0], self.pulse_times, [self.total_time]))

    @property
    def free_intervals(self):
        return np.diff(self.boundaries)


def _repeat_phases(pattern, n):
    reps = -(-n // len(pattern))
    return (pattern * reps)[:n]


def equidistant(n, t1, family="cpmg"):
    """n pulses at odd multiples of t1; total time 2*n*t1.

    family "xy8" tags the usual X Y X Y Y X Y X phase pattern, anything
    else gets constant-phase (CPMG-style) metadata.
    """
    if n < 1 or int(n) != n:
        raise ValueError(f"pulse count must be a positive integer, got {n}")
    if t1 <= 0:
        raise ValueError(f"t1 must be positive, got {t1}")
    n = int(n)
    times = tuple((2 * k - 1) * t1 for k in range(1, n + 1))
    if family == "xy8":
        phases = _repeat_phases(_XY8_PHASES, n)
    else:
        phases = (math.pi / 2,) * n
    return PulseSequence(
        total_time=2 * n * t1,
        pulse_times=times,
        family=family,
        phases=phases,
        params=(("n", n), ("t1", float(t1))),
    )


def udd(n, total_time):
    """Uhrig sequence: pulse j at T sin^2(j pi / (2n+2))."""
    if n < 1 or int(n) != n:
        raise ValueError(f"pulse count must be a positive integer, got {n}")
    if total_time <= 0:
        raise ValueError(f"total_time must be positive, got {total_time}")
    n = int(n)
    times = tuple(total_time * math.sin(j * math.pi / (2 * n + 2)) ** 2 for j in range(1, n + 1))
    return PulseSequence(
        total_time=float(total_time),
        pulse_times=times,
        family="udd",
        phases=(math.pi / 2,) * n,
        params=(("n", n),),
    )


def axy(n_blocks, r_m, total_time, base_phase_pattern="xy8"):
    """Adaptive XY family: n_blocks Knill blocks of five pulses each.

    Pulse (i, j) sits at T/N * ((2i-1)/2 + r_m (2j-M-1)/(2M)) with M = 5;
    r_m in (0, 1] compresses each block around its center.
    """
    if n_blocks not in (4, 8):
        raise ValueError(f"supported block counts are 4 and 8, got {n_blocks}")
    if not MIN_R_M <= r_m <= 1.0:
        raise ValueError(f"r_m must be in [{MIN_R_M}, 1], got {r_m}")
    if total_time <= 0:
        raise ValueError(f"total_time must be positive, got {total_time}")
    m = 5
    times = []
    phases = []
    block_phases = _repeat_phases(_XY8_PHASES, n_blocks)
    for i in range(1, n_blocks + 1):
        phi = block_phases[i - 1]
        knill = (phi + math.pi / 6, phi, phi + math.pi / 2, phi, phi + math.pi / 6)
        for j in range(1, m + 1):
            times.append(
                total_time / n_blocks * ((2 * i - 1) / 2 + r_m * (2 * j - m - 1) / (2 * m))
            )
            phases.append(knill[j - 1])
    return PulseSequence(
        total_time=float(total_time),
        pulse_times=tuple(times),
        family="axy",
        phases=tuple(phases),
        params=(("n_blocks", n_blocks), ("r_m", float(r_m)), ("pattern", base_phase_pattern)),
    )


def custom(times, total_time):
    """Validated pass-through; an empty list gives free evolution (Ramsey)."""
    return PulseSequence(
        total_time=float(total_time),
        pulse_times=tuple(times),
        family="custom",
    )


def sequence_to_dict(seq):
    d = {"family": seq.family, "total_time_us": seq.total_time}
    params = dict(seq.params)
    if "n" in params:
        d["n"] = params["n"]
    if "t1" in params:
        d["t1_us"] = params["t1"]
    if "n_blocks" in params:
        d["n"] = 5 * params["n_blocks"]
        d["r_m"] = params["r_m"]
    if seq.family == "custom":
        d["times_us"] = list(seq.pulse_times)
    return d


def sequence_from_dict(d):
    family = d.get("family")
    try:
        if family in ("cpmg", "xy8"):
            return equidistant(int(d["n"]), float(d["t1_us"]), family=family)
        if family == "udd":
            return udd(int(d["n"]), float(d["total_time_us"]))
        if family == "axy":
            return axy(int(d["n"]) // 5, float(d["r_m"]), float(d["total_time_us"]))
        if family == "custom":
            return custom([float(t) for t in d.get("times_us", [])], float(d["total_time_us"]))
    except KeyError as exc:
        raise ValueError(f"sequence spec missing field {exc}") from exc
    raise ValueError(f"unknown sequence family: {family!r}")


def sequence_to_json(seq, **kwargs):
    return json.dumps(sequence_to_dict(seq), **kwargs)


def sequence_from_json(text):
    return sequence_from_dict(json.loads(text))
