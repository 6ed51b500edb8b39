import math

import numpy as np
import pytest

from ddspec import forward, sequences
from ddspec.model import (
    EnvironmentModel,
    GaussianNSD,
    NuclearCoupling,
    khz_to_rad_us,
)


def _flat_env(y0_per_us=0.005):
    nsd = GaussianNSD(
        y0=y0_per_us, a=1e-30, nu_l_khz=750.0, sigma_khz=9.0
    )
    return EnvironmentModel(b_field=700.0, nsd=nsd)


def _env_635():
    nsd = GaussianNSD(y0=0.0037, a=0.380, nu_l_khz=679.9, sigma_khz=8.5)
    nuc = NuclearCoupling(
        omega_par=khz_to_rad_us(-698.0), omega_perp=khz_to_rad_us(148.0)
    )
    return EnvironmentModel(b_field=635.0, nsd=nsd, nuclei=(nuc,))


def test_coherence_no_noise_no_nuclei():
    env = EnvironmentModel(
        b_field=700.0,
        nsd=GaussianNSD(y0=1e-30, a=1e-30, nu_l_khz=750.0, sigma_khz=9.0),
    )
    seq = sequences.equidistant(8, 0.3)
    assert forward.coherence(seq, env) == pytest.approx(1.0, abs=1e-10)


def test_flat_spectrum_log_slope():
    # flat S = y0 gives P = (1 + exp(-y0 * 2 n t1)) / 2 exactly
    env = _flat_env(0.02)
    t1 = 0.4
    for n in (4, 16, 64):
        seq = sequences.equidistant(n, t1)
        p = forward.coherence(seq, env)
        assert 2 * p - 1 == pytest.approx(math.exp(-0.02 * 2 * n * t1), rel=1e-8)


def test_coherence_dips_below_half():
    # near nuclear resonance the modulation drives P under 1/2
    env = _env_635()
    t1 = 0.242
    ps = [forward.coherence(sequences.equidistant(n, t1), env) for n in range(2, 65, 2)]
    assert min(ps) < 0.5
    assert all(0.0 <= p <= 1.0 for p in ps)


def test_y0_monotonicity():
    seq = sequences.equidistant(16, 0.35)
    ps = [
        forward.coherence(seq, _flat_env(y0))
        for y0 in (0.001, 0.005, 0.02, 0.08)
    ]
    assert all(a > b for a, b in zip(ps, ps[1:]))


def test_modulation_product_factorizes():
    env = _env_635()
    extra = NuclearCoupling(
        omega_par=khz_to_rad_us(-73.0), omega_perp=khz_to_rad_us(59.0)
    )
    env2 = EnvironmentModel(
        b_field=env.b_field, nsd=env.nsd, nuclei=env.nuclei + (extra,)
    )
    seq = sequences.equidistant(24, 0.242)
    m1 = forward.modulation_product(seq, env)
    m_extra = forward.modulation_product(
        seq, EnvironmentModel(b_field=env.b_field, nsd=env.nsd, nuclei=(extra,))
    )
    m_both = forward.modulation_product(seq, env2)
    assert m_both == pytest.approx(m1 * m_extra, abs=1e-12)


def test_decay_dataset_noiseless_matches_coherence():
    env = _env_635()
    tr = forward.decay_dataset(0.242, [2, 4, 8], env)
    assert tr.family == "cpmg"
    assert tr.t1 == 0.242
    for r in tr.records:
        seq = sequences.equidistant(r.n, 0.242)
        assert r.total_time == pytest.approx(seq.total_time)
        assert r.p == pytest.approx(forward.coherence(seq, env), abs=1e-12)
        assert r.sigma_p == 1e-3


def test_decay_dataset_deterministic_seeding():
    env = _flat_env()
    a = forward.decay_dataset(0.3, [4, 8, 16], env, shot_sigma=0.02, rng_seed=5)
    b = forward.decay_dataset(0.3, [4, 8, 16], env, shot_sigma=0.02, rng_seed=5)
    c = forward.decay_dataset(0.3, [4, 8, 16], env, shot_sigma=0.02, rng_seed=6)
    assert [r.p for r in a.records] == [r.p for r in b.records]
    assert [r.p for r in a.records] != [r.p for r in c.records]
    assert all(r.sigma_p == 0.02 for r in a.records)


def test_decay_dataset_noise_statistics():
    env = _flat_env(1e-30)
    n_list = list(range(2, 402, 2))
    tr = forward.decay_dataset(0.1, n_list, env, shot_sigma=0.05, rng_seed=1)
    resid = np.array([r.p for r in tr.records]) - 1.0
    assert abs(resid.mean()) < 0.05 / math.sqrt(len(n_list)) * 4
    assert resid.std() == pytest.approx(0.05, rel=0.2)


def test_decay_dataset_empty_n_list():
    with pytest.raises(ValueError):
        forward.decay_dataset(0.3, [], _flat_env())


def test_sweep_coherence_families():
    env = _flat_env(0.01)
    grid = [{"n": 8, "t1": 0.3}, {"n": 16, "t1": 0.3}]
    out = forward.sweep_coherence("cpmg", grid, env)
    assert len(out) == 2
    assert out[0][0] == grid[0]
    assert out[0][1] > out[1][1]
    udd_out = forward.sweep_coherence("udd", [{"n": 5, "total_time": 4.8}], env)
    assert udd_out[0][1] == pytest.approx(0.5 * (1 + math.exp(-0.01 * 4.8)), rel=1e-8)
    with pytest.raises(ValueError):
        forward.build_sequence("warp", n=2, t1=0.3)


def test_trace_csv_roundtrip():
    env = _env_635()
    tr = forward.decay_dataset(0.242, [2, 4, 8, 16], env, shot_sigma=0.02, rng_seed=3)
    text = forward.trace_to_csv(tr, comments=["seed: 3", "note: roundtrip"])
    assert text.startswith("# seed: 3\n# note: roundtrip\n")
    back = forward.trace_from_csv(text)
    assert back.family == tr.family
    assert back.t1 == tr.t1
    assert [r.p for r in back.records] == [r.p for r in tr.records]
    assert [r.sigma_p for r in back.records] == [r.sigma_p for r in tr.records]


def test_trace_csv_errors():
    with pytest.raises(ValueError):
        forward.trace_from_csv("n,p\n1,0.5\n")
    bad = "family,t1_us,n,total_time_us,p,sigma_p\ncpmg,0.3,2,1.2,0.9,0.01\nxy8,0.3,2,1.2,0.9,0.01\n"
    with pytest.raises(ValueError):
        forward.trace_from_csv(bad)
