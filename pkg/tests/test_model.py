import json
import math

import numpy as np
import pytest

from ddspec.model import (
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
    rate_per_ms_to_per_us,
)


def test_khz_roundtrip():
    nu = 750.0
    assert rad_us_to_khz(khz_to_rad_us(nu)) == pytest.approx(nu, rel=1e-14)
    # 1 kHz ordinary = 2pi * 1e-3 rad/us
    assert khz_to_rad_us(1.0) == pytest.approx(2e-3 * math.pi)


def test_rate_units():
    # tables quote spectral amplitudes as kHz-valued rates, i.e. 1/ms
    assert rate_per_ms_to_per_us(600.0) == pytest.approx(0.6)


def test_larmor_default_gamma():
    # 13C at 635 G: 1.0705 kHz/G * 635 G = 679.77 kHz
    wl = larmor(635.0)
    assert rad_us_to_khz(wl) == pytest.approx(679.7675, abs=1e-3)
    with pytest.raises(ValueError):
        larmor(0.0)


def test_gaussian_nsd_eval():
    nsd = GaussianNSD(y0=0.005, a=0.6, nu_l_khz=750.0, sigma_khz=9.0)
    assert nsd_eval(nsd, nsd.omega_peak) == pytest.approx(0.605)
    far = nsd_eval(nsd, khz_to_rad_us(200.0))
    assert far == pytest.approx(0.005)
    # vectorized evaluation matches scalars
    w = np.array([nsd.omega_peak, khz_to_rad_us(200.0)])
    assert np.allclose(nsd_eval(nsd, w), [0.605, 0.005])


def test_gaussian_nsd_validation():
    with pytest.raises(ValueError):
        GaussianNSD(y0=-0.1, a=0.6, nu_l_khz=750.0, sigma_khz=9.0)
    with pytest.raises(ValueError):
        GaussianNSD(y0=0.1, a=0.6, nu_l_khz=750.0, sigma_khz=0.0)
    with pytest.raises(ValueError):
        GaussianNSD(y0=0.1, a=0.6, nu_l_khz=-5.0, sigma_khz=9.0)


def test_tabulated_nsd_interp_and_clamp():
    nsd = TabulatedNSD(omegas=(1.0, 2.0, 3.0), values=(0.0, 1.0, 0.5))
    assert nsd_eval(nsd, 1.5) == pytest.approx(0.5)
    assert nsd_eval(nsd, 0.1) == pytest.approx(0.0)  # clamped low
    assert nsd_eval(nsd, 10.0) == pytest.approx(0.5)  # clamped high
    with pytest.raises(ValueError):
        TabulatedNSD(omegas=(1.0, 1.0), values=(0.0, 1.0))
    with pytest.raises(ValueError):
        TabulatedNSD(omegas=(1.0, 2.0), values=(0.0, -1.0))


def test_nuclear_coupling_sign_convention():
    c = NuclearCoupling(omega_par=-4.0, omega_perp=1.0)
    assert c.omega_par == -4.0
    with pytest.raises(ValueError):
        NuclearCoupling(omega_par=0.0, omega_perp=-0.1)


def test_environment_model():
    nsd = GaussianNSD(y0=0.005, a=0.6, nu_l_khz=750.0, sigma_khz=9.0)
    env = EnvironmentModel(b_field=700.0, nsd=nsd)
    assert rad_us_to_khz(env.omega_l) == pytest.approx(700.0 * 1.0705)
    assert env.ms == -1
    with pytest.raises(ValueError):
        EnvironmentModel(b_field=700.0, nsd=nsd, ms=0)
    env2 = env.with_nsd(GaussianNSD(y0=0.01, a=0.6, nu_l_khz=750.0, sigma_khz=9.0))
    assert env2.nsd.y0 == 0.01
    assert env2.b_field == env.b_field


def test_trace_record_validation():
    with pytest.raises(ValueError):
        TraceRecord(n=2, total_time=1.0, p=0.9, sigma_p=0.0)
    with pytest.raises(ValueError):
        TraceRecord(n=-1, total_time=1.0, p=0.9, sigma_p=0.01)


def test_trace_consistency_check():
    rec = TraceRecord(n=4, total_time=8.0, p=0.9, sigma_p=0.01)
    tr = CoherenceTrace(family="cpmg", records=(rec,), t1=1.0)
    assert tr.n.tolist() == [4]
    with pytest.raises(ValueError):
        CoherenceTrace(family="cpmg", records=(rec,), t1=0.7)
    with pytest.raises(ValueError):
        CoherenceTrace(family="cpmg", records=(), t1=1.0)


def test_rate_point_validation():
    with pytest.raises(ValueError):
        RatePoint(omega=-1.0, rate=0.1, rate_err=0.01)
    with pytest.raises(ValueError):
        RatePoint(omega=1.0, rate=0.1, rate_err=0.0)


def test_environment_json_roundtrip():
    nsd = GaussianNSD(y0=0.005, a=0.6, nu_l_khz=750.0, sigma_khz=9.0)
    nuc = NuclearCoupling(omega_par=khz_to_rad_us(-698.0), omega_perp=khz_to_rad_us(148.0))
    env = EnvironmentModel(b_field=635.0, nsd=nsd, nuclei=(nuc,))
    d = environment_to_dict(env)
    # boundary units: rates in 1/ms, i.e. the kHz-valued table numbers
    assert d["nsd"]["y0"] == pytest.approx(5.0)
    assert d["nsd"]["a"] == pytest.approx(600.0)
    assert d["nuclei"][0]["omega_par_khz"] == pytest.approx(-698.0)
    env2 = environment_from_json(environment_to_json(env))
    assert env2.nsd.y0 == pytest.approx(env.nsd.y0, rel=1e-12)
    assert env2.nuclei[0].omega_perp == pytest.approx(nuc.omega_perp, rel=1e-12)
    assert env2.b_field == env.b_field


def test_tabulated_json_roundtrip():
    nsd = TabulatedNSD(omegas=(1.0, 2.0), values=(0.1, 0.2))
    env = EnvironmentModel(b_field=100.0, nsd=nsd)
    env2 = environment_from_dict(json.loads(environment_to_json(env)))
    assert np.allclose(env2.nsd.omegas, nsd.omegas)
    assert np.allclose(env2.nsd.values, nsd.values)


def test_environment_from_dict_errors():
    with pytest.raises(ValueError):
        environment_from_dict({"nsd": {"type": "gaussian"}})
    with pytest.raises(ValueError):
        environment_from_dict(
            {"b_field_gauss": 1.0, "nsd": {"type": "nope"}}
        )
