import math

import numpy as np
import pytest
from scipy.integrate import quad

from oceansim.errors import ConfigError
from oceansim.spectra import (G, GAMMA, GridConfig, SpectrumParams, amplitude_variance, beta_s, conj_neg,
                              dbxi_integral, directional, dispersion, donelan_banner, gaussian_draws,
                              generate_h0, jonswap, jonswap_alpha, peak_frequency, q_dbxi_approx,
                              q_dbxi_exact, swell_spread, wave_numbers)


def jonswap_scalar(w, U, F, wp, g=G):
    alpha = 0.076 * (U * U / (F * g)) ** 0.22
    sigma = 0.07 if w <= wp else 0.09
    r = math.exp(-((w - wp) ** 2) / (2 * sigma**2 * wp**2))
    return alpha * g * g / w**5 * math.exp(-1.25 * (wp / w) ** 4) * GAMMA**r


def test_dispersion_values():
    assert dispersion(0.0) == 0.0
    assert dispersion(1.0) == pytest.approx(3.1315571206669692, abs=1e-12)
    assert dispersion(4.0) == pytest.approx(2 * dispersion(1.0), rel=1e-15)
    with pytest.raises(ValueError):
        dispersion(-1.0)


def test_peak_frequency_modes():
    p = SpectrumParams(wind_speed=20.0, fetch=1e5)
    assert peak_frequency(p) == pytest.approx(22 * G * G / (20 * 1e5))
    cube = SpectrumParams(wind_speed=20.0, fetch=1e5, peak_frequency="cube-root")
    assert peak_frequency(cube) == pytest.approx(22 * (G * G / 2e6) ** (1 / 3))
    assert peak_frequency(SpectrumParams(peak_frequency=0.7)) == 0.7


def test_jonswap_peak_has_gamma_factor():
    p = SpectrumParams(wind_speed=20.0, peak_frequency=0.6)
    wp = 0.6
    base = jonswap_alpha(p) * G * G / wp**5 * math.exp(-1.25)
    assert jonswap(wp, p) == pytest.approx(base * GAMMA, rel=1e-12)


def test_jonswap_matches_scalar_oracle():
    p = SpectrumParams(wind_speed=20.0, fetch=1e5)
    wp = peak_frequency(p)
    for w in (2 * wp, 0.5 * wp, 1.3):
        assert jonswap(w, p) == pytest.approx(jonswap_scalar(w, 20.0, 1e5, wp), rel=1e-12)


def test_jonswap_continuous_at_peak():
    p = SpectrumParams(peak_frequency=0.8)
    assert jonswap(0.8 * (1 - 1e-12), p) == pytest.approx(jonswap(0.8 * (1 + 1e-12), p), rel=1e-9)


def test_jonswap_domain():
    with pytest.raises(ValueError):
        jonswap(0.0, SpectrumParams())
    assert jonswap(1e-3, SpectrumParams(peak_frequency=1.0)) == 0.0


def test_beta_s_branches():
    assert beta_s(0.5) == pytest.approx(2.61 * 0.5**1.3)
    assert beta_s(1.0) == pytest.approx(2.28)
    eps = 0.8393 * math.exp(-0.567 * math.log(2.56)) - 0.4
    assert beta_s(1.6) == pytest.approx(10**eps)


@pytest.mark.parametrize("r", [0.3, 0.8, 1.2, 2.0, 10.0])
def test_donelan_banner_normalized(r):
    val, _ = quad(lambda t: float(donelan_banner(r, t, 1.0)), -np.pi, np.pi, limit=200)
    assert val == pytest.approx(1.0, abs=1e-6)


def test_donelan_banner_shape():
    th = np.linspace(-np.pi, np.pi, 401)
    d = donelan_banner(1.0, th, 1.0)
    assert np.argmax(d) == 200
    var = [quad(lambda t: t * t * float(donelan_banner(r, t, 1.0)), -np.pi, np.pi)[0] for r in (1.0, 0.2)]
    # beta_s(1.0) = 2.28 is larger than beta_s(0.2), so the spread is narrower
    assert var[0] < var[1]


def test_swell_spread_values():
    th = np.linspace(-np.pi, np.pi, 9)
    assert np.all(swell_spread(1.0, th, 1.0, 0.0) == 1.0)
    assert np.all(swell_spread(1.0, 0.0, 1.0, np.linspace(0, 1, 5)) == 1.0)
    assert swell_spread(1.0, np.pi / 2, 1.0, 1.0) == pytest.approx(math.cos(math.pi / 4) ** (32 * math.tanh(1.0)))


def test_q_dbxi_approx_values():
    assert q_dbxi_approx(0.5) == pytest.approx(7.1467551 * 0.25 - 13.4662001 * 0.5 + 7.75651088)
    assert q_dbxi_approx(150.0) == pytest.approx(1.2038847 * 150 + 0.0008147)
    with pytest.raises(ValueError):
        q_dbxi_approx(0.0)


@pytest.mark.parametrize("xi", [0.0, 0.4, 1.0])
@pytest.mark.parametrize("r", [0.2, 0.94, 1.5, 7.0])
def test_dbxi_integral_matches_quad(r, xi):
    def f(t):
        return float(donelan_banner(r, t, 1.0) * swell_spread(r, t, 1.0, xi))

    ref, _ = quad(f, -np.pi, np.pi, limit=400, epsabs=1e-13)
    assert dbxi_integral(r, xi) == pytest.approx(ref, rel=1e-6)
    assert q_dbxi_exact(r, xi) * ref == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("omega", [0.3, 0.9, 2.5])
def test_directional_integrates_to_one(omega):
    p = SpectrumParams(peak_frequency=1.0, swell=0.5, direction_mix=0.7)
    val, _ = quad(lambda t: float(directional(omega, t, p)), -np.pi, np.pi, limit=400)
    assert val == pytest.approx(1.0, abs=1e-3)


def test_directional_limits():
    th = np.linspace(-3, 3, 7)
    assert np.allclose(directional(1.0, th, SpectrumParams(direction_mix=0.0)), 1 / (2 * np.pi))
    p = SpectrumParams(peak_frequency=1.0, swell=0.0, normalization="polynomial")
    assert np.allclose(directional(0.5, th, p), q_dbxi_approx(0.5) * donelan_banner(0.5, th, 1.0))


def test_params_validation():
    for bad in ({"wind_speed": 0.0}, {"fetch": -1.0}, {"swell": 1.5}, {"direction_mix": -0.1},
                {"peak_frequency": "square"}, {"normalization": "none"}, {"rng_seed": -1}):
        with pytest.raises(ConfigError):
            SpectrumParams(**bad)


def test_grid_config_validation():
    with pytest.raises(ConfigError):
        GridConfig(N=12)
    with pytest.raises(ConfigError):
        GridConfig(L=0.0)
    with pytest.raises(ConfigError):
        GridConfig(k_min=2.0, k_max=1.0)


def test_wave_numbers_layout():
    kx, kz = wave_numbers(8, 16.0)
    assert kx[0, 0] == pytest.approx(-np.pi / 2)
    assert kx[4, 3] == 0.0 and kz[3, 4] == 0.0
    assert np.allclose(kz[:, 5], 2 * np.pi * 1 / 16.0)


def test_generate_h0_structure():
    cfg = GridConfig(N=32, L=64.0, k_min=0.3, k_max=2.0)
    g = generate_h0(cfg, SpectrumParams(rng_seed=9))
    assert np.all(g.omega**2 == pytest.approx(G * g.k))
    assert g.h0[16, 16] == 0
    out = (g.k < 0.3) | (g.k >= 2.0)
    assert np.all(g.h0[out] == 0) and np.all(g.h0_conj_neg[out] == 0)
    assert np.all(g.h0[0, :] == 0) and np.all(g.h0[:, 0] == 0)
    assert np.array_equal(g.h0_conj_neg, conj_neg(g.h0))
    inner = np.zeros_like(g.h0)
    inner[1:, 1:] = g.h0[1:, 1:]
    # h0_conj_neg(k) = conj(h0(-k)) at an explicit pair of nodes
    assert g.h0_conj_neg[20, 13] == np.conj(g.h0[12, 19])


def test_generate_h0_deterministic():
    cfg = GridConfig(N=16, L=32.0)
    a = generate_h0(cfg, SpectrumParams(rng_seed=5))
    b = generate_h0(cfg, SpectrumParams(rng_seed=5))
    c = generate_h0(cfg, SpectrumParams(rng_seed=6))
    assert np.array_equal(a.h0, b.h0)
    assert not np.array_equal(a.h0, c.h0)


def test_gaussian_rows_independent():
    a = gaussian_draws(1, 0, 16)
    b = gaussian_draws(1, 0, 32)
    assert np.array_equal(a[3, :], a[3, :])
    assert not np.array_equal(gaussian_draws(1, 1, 16), a)
    assert b.shape == (32, 32)


def test_vanishing_wind_flat_sea():
    g = generate_h0(GridConfig(N=16, L=16.0), SpectrumParams(wind_speed=1e-9, peak_frequency="cube-root"))
    assert np.max(np.abs(g.h0)) < 1e-12


def test_ensemble_variance_matches_closed_form():
    cfg = GridConfig(N=8, L=32.0)
    p = SpectrumParams(peak_frequency=1.0, swell=0.3)
    samples = np.array([np.abs(generate_h0(cfg, SpectrumParams(**{**p.__dict__, "rng_seed": s})).h0) ** 2
                        for s in range(1000)])
    g = generate_h0(cfg, p)
    live = np.abs(g.h0) > 0
    theta = np.arctan2(g.kz[live], g.kx[live])
    expected = amplitude_variance(g.k[live], g.omega[live], theta, cfg.L, p)
    ratio = samples.mean(axis=0)[live] / expected
    assert np.all(np.abs(ratio - 1) < 0.2)
    assert abs(ratio.mean() - 1) < 0.1
