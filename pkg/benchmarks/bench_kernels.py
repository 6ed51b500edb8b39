"""Compare the compiled and pure-Python kernel backends.

Run:  python3 benchmarks/bench_kernels.py
"""
import time

import numpy as np

from ddspec import _kernels_py
from ddspec import sequences

try:
    from ddspec import _kernels_c
except ImportError:
    _kernels_c = None


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_y_abs2():
    seq = sequences.equidistant(128, 0.35)
    omegas = np.linspace(1e-3, 60.0, 20000)
    rows = []
    t_py, ref = timeit(_kernels_py.y_abs2, seq.boundaries, omegas)
    rows.append(("pure-python", t_py))
    if _kernels_c is not None:
        t_c, out = timeit(_kernels_c.y_abs2, seq.boundaries, omegas)
        assert np.allclose(out, ref, rtol=1e-12, atol=1e-12)
        rows.append(("cython", t_c))
    return "y_abs2 (n=128, 20k frequencies)", rows


def bench_conditional_mod():
    seq = sequences.equidistant(64, 0.242)
    rng = np.random.default_rng(0)
    wpar = rng.normal(0.0, 4.0, 2000)
    wperp = np.abs(rng.normal(0.0, 1.0, 2000))
    args = (seq.boundaries, wpar, wperp, 4.272, -1.0)
    rows = []
    t_py, ref = timeit(_kernels_py.conditional_mod_batch, *args)
    rows.append(("pure-python", t_py))
    if _kernels_c is not None:
        t_c, out = timeit(_kernels_c.conditional_mod_batch, *args)
        assert np.allclose(out, ref, rtol=1e-10, atol=1e-12)
        rows.append(("cython", t_c))
    return "conditional_mod_batch (n=64, 2000 spins)", rows


def main():
    for title, rows in (bench_y_abs2(), bench_conditional_mod()):
        print(title)
        base = rows[0][1]
        for name, t in rows:
            speedup = base / t
            print(f"  {name:<12} {t * 1e3:8.2f} ms   x{speedup:.1f}")
        print()
    if _kernels_c is None:
        print("compiled backend not available; only pure-python timed")


if __name__ == "__main__":
    main()
