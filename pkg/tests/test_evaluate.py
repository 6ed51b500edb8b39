import math

import numpy as np
import pytest

from ddspec import evaluate, forward
from ddspec.model import (
    CoherenceTrace,
    EnvironmentModel,
    GaussianNSD,
    TraceRecord,
)


def _flat_env(y0):
    return EnvironmentModel(
        b_field=700.0,
        nsd=GaussianNSD(y0=y0, a=1e-30, nu_l_khz=750.0, sigma_khz=9.0),
    )


def test_chi_nu_squared_examples():
    # residuals (1 sigma, 2 sigma) over N - 1 = 1 -> 5.0
    assert evaluate.chi_nu_squared(
        [1.0, 1.0], [(0.9, 0.1), (0.8, 0.1)]
    ) == pytest.approx(5.0)
    assert evaluate.chi_nu_squared([0.5, 0.7, 0.9], [(0.5, 0.1), (0.7, 0.1), (0.9, 0.1)]) == 0.0


def test_chi_nu_squared_delta_scaling():
    sim = [1.0, 0.9, 0.8]
    data = [(0.95, 0.02), (0.88, 0.02), (0.83, 0.02)]
    base = evaluate.chi_nu_squared(sim, data)
    halved = evaluate.chi_nu_squared(sim, [(y, d / 2) for y, d in data])
    assert halved == pytest.approx(4.0 * base)


def test_chi_nu_squared_permutation_invariance():
    sim = [1.0, 0.9, 0.8]
    data = [(0.95, 0.02), (0.88, 0.03), (0.83, 0.01)]
    a = evaluate.chi_nu_squared(sim, data)
    b = evaluate.chi_nu_squared(sim[::-1], data[::-1])
    assert a == pytest.approx(b)


def test_chi_nu_squared_validation():
    with pytest.raises(ValueError):
        evaluate.chi_nu_squared([1.0], [(1.0, 0.1)])
    with pytest.raises(ValueError):
        evaluate.chi_nu_squared([1.0, 1.0], [(1.0, 0.1)])
    with pytest.raises(ValueError):
        evaluate.chi_nu_squared([1.0, 1.0], [(1.0, 0.0), (1.0, 0.1)])


def _trace(t1, n_list, env, seed):
    return forward.decay_dataset(t1, n_list, env, shot_sigma=0.02, rng_seed=seed)


def test_split_traces():
    env = _flat_env(0.01)
    tr = _trace(0.3, [2, 4, 8, 12, 20, 32], env, 0)
    low, high = evaluate.split_traces([tr])
    assert [r.n for r in low[0].records] == [2, 4]
    assert [r.n for r in high[0].records] == [20, 32]
    # custom split boundaries
    low2, high2 = evaluate.split_traces([tr], low_n_max=10, high_n_min=12)
    assert [r.n for r in low2[0].records] == [2, 4, 8]
    assert [r.n for r in high2[0].records] == [12, 20, 32]


def test_split_traces_drops_empty_groups():
    env = _flat_env(0.01)
    tr = _trace(0.3, [10, 12, 16], env, 0)
    low, high = evaluate.split_traces([tr])
    assert low == []
    assert high == []


def test_regime_report_self_consistent_model():
    env = _flat_env(0.02)
    traces = [_trace(0.3, [2, 4, 6, 20, 24, 32], env, s) for s in (0, 1)]
    rep = evaluate.regime_report(env, env, traces)
    for g in rep["groups"].values():
        assert g["n_points"] == 6
        assert g["chi_nu_m1"] == pytest.approx(g["chi_nu_m2"])
        assert g["chi_nu_m1"] < 3.0
    assert rep["combined_chi_nu"] < 3.0
    assert rep["split"] == {"low_n_max": 8, "high_n_min": 20}


def test_regime_report_discriminates_wrong_model():
    truth = _flat_env(0.05)
    wrong = _flat_env(0.005)
    traces = [_trace(0.4, [2, 4, 6, 20, 24, 32, 40], truth, s) for s in (0, 1, 2)]
    rep = evaluate.regime_report(truth, wrong, traces)
    assert rep["groups"]["high_n"]["chi_nu_m2"] > 10.0
    assert rep["groups"]["high_n"]["chi_nu_m1"] < 3.0


def test_regime_report_validation():
    env = _flat_env(0.01)
    other = EnvironmentModel(b_field=600.0, nsd=env.nsd)
    tr = _trace(0.3, [2, 4, 20, 24], env, 0)
    with pytest.raises(ValueError):
        evaluate.regime_report(env, other, [tr])
    mid = _trace(0.3, [10, 12, 16], env, 0)
    with pytest.raises(ValueError):
        evaluate.regime_report(env, env, [mid])


def test_format_report():
    env = _flat_env(0.02)
    traces = [_trace(0.3, [2, 4, 20, 24], env, 0)]
    rep = evaluate.regime_report(env, env, traces)
    text = evaluate.format_report(rep)
    assert "low_n" in text and "high_n" in text and "combined" in text
    rep["groups"]["high_n"] = None
    assert "(empty)" in evaluate.format_report(rep)
