import os
import subprocess
import sys

import numpy as np

import ddspec
from ddspec import _backend, _kernels_py, sequences


def test_backend_reported():
    assert ddspec.BACKEND in ("cython", "python")
    assert ddspec.BACKEND == _backend.BACKEND


def test_y_abs2_backends_agree():
    rng = np.random.default_rng(0)
    for n in (1, 2, 7, 32):
        seq = sequences.equidistant(n, float(rng.uniform(0.05, 1.0)))
        b = np.asarray(seq.boundaries, dtype=float)
        om = np.concatenate(
            [np.logspace(-8, 2, 500), rng.uniform(0.01, 50.0, 500)]
        )
        fast = np.asarray(_backend.y_abs2(b, om))
        ref = np.asarray(_kernels_py.y_abs2(b, om))
        assert np.allclose(fast, ref, rtol=1e-12, atol=1e-14)


def test_conditional_mod_backends_agree():
    rng = np.random.default_rng(1)
    wl = 4.272
    for _ in range(50):
        seq = sequences.equidistant(int(rng.integers(1, 24)), float(rng.uniform(0.05, 1.0)))
        wpar = float(rng.uniform(-8.0, 8.0))
        wperp = float(rng.uniform(0.0, 8.0))
        fast = _backend.conditional_mod(seq.boundaries, wpar, wperp, wl, -1.0)
        ref = _kernels_py.conditional_mod(seq.boundaries, wpar, wperp, wl, -1.0)
        assert abs(fast - ref) < 1e-12


def test_conditional_mod_batch_backends_agree():
    rng = np.random.default_rng(2)
    wl = 4.272
    seq = sequences.equidistant(16, 0.31)
    wpar = rng.uniform(-8.0, 8.0, 200)
    wperp = rng.uniform(0.0, 8.0, 200)
    fast = np.asarray(_backend.conditional_mod_batch(seq.boundaries, wpar, wperp, wl, -1.0))
    ref = np.asarray(_kernels_py.conditional_mod_batch(seq.boundaries, wpar, wperp, wl, -1.0))
    assert np.allclose(fast, ref, rtol=1e-12, atol=1e-13)


def test_pure_python_env_override():
    code = (
        "import ddspec, sys; "
        "sys.exit(0 if ddspec.BACKEND == 'python' else 1)"
    )
    env = dict(os.environ, DDSPEC_PURE_PYTHON="1")
    proc = subprocess.run([sys.executable, "-c", code], env=env)
    assert proc.returncode == 0
