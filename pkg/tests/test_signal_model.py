import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbasim import presets
from hbasim.constants import GAUSSIAN_2P_PREFACTOR, GM
from hbasim.series import SweepKind
from hbasim.signal_model import (
    BeamGeometry,
    Broadband,
    CollectionChain,
    ExperimentConfig,
    Monochromatic,
    beam_area,
    c2pef_coefficient,
    c2pef_signal,
    e2pa_signal_toy,
    gamma_overlap,
    hba_signal,
    photon_flux,
    simulate_power_series,
    total_signal,
)
from hbasim.spectra import Spectrum, SpectrumKind, integrate
from hbasim.synthetic import gaussian_spectrum

mp.mp.dps = 30


def test_prefactor_closed_form():
    exact = float(mp.sqrt(2) * (mp.log(2) / mp.pi) ** mp.mpf(1.5))
    assert GAUSSIAN_2P_PREFACTOR == pytest.approx(exact, rel=1e-15)
    assert exact == pytest.approx(0.146564361498457, abs=1e-15)


def test_beam_area_55_by_57():
    assert beam_area(presets.LASER_BEAM) == pytest.approx(math.pi * 27.5e-4 * 28.5e-4, rel=1e-15)


def test_flux_at_10_mW():
    # 10 mW at 1060 nm over the 55x57 um ellipse
    phi = photon_flux(10e-3, 1060.0, beam_area(presets.LASER_BEAM))
    assert phi == pytest.approx(2.167213545071109e21, rel=1e-12)
    assert phi == pytest.approx(2.17e21, rel=2e-3)


def test_flux_rejects_nonpositive():
    with pytest.raises(ValueError):
        photon_flux(0.0, 1060.0, 1.0)


def test_rh6g_c2pef_at_1_mW():
    # arbitrary-precision evaluation in SI units
    hv = mp.mpf("6.62607015e-34") * 299792458 / mp.mpf("1060e-9")
    area = mp.pi * mp.mpf("27.5e-6") * mp.mpf("28.5e-6")
    n = mp.mpf("6.02214076e23") * mp.mpf("1.1e-3") * 1000
    sigma = mp.mpf("9.9e-58")
    k = mp.mpf("0.075") * mp.mpf("0.042") * mp.mpf("0.9")
    pre = mp.sqrt(2) * (mp.log(2) / mp.pi) ** mp.mpf(1.5)
    oracle = float(pre * k * n * mp.mpf("0.01") * sigma / area * (mp.mpf("1e-3") / hv) ** 2)
    got = c2pef_signal(presets.rh6g_c2pa_experiment(), Monochromatic(1060.0, 1e-3))
    assert got == pytest.approx(oracle, rel=1e-12)
    assert got == pytest.approx(31.51309545791456, rel=1e-12)


@settings(max_examples=40)
@given(st.floats(1e-5, 1.0), st.floats(0.1, 10.0))
def test_c2pef_quadratic_in_power(p, k):
    cfg = presets.rh6g_c2pa_experiment()
    a = c2pef_signal(cfg, Monochromatic(1060.0, p))
    b = c2pef_signal(cfg, Monochromatic(1060.0, p * k))
    assert b == pytest.approx(a * k * k, rel=1e-12)


def test_c2pef_coefficient_consistency():
    cfg = presets.rh6g_c2pa_experiment()
    f = c2pef_signal(cfg, Monochromatic(1060.0, 2e-3))
    assert c2pef_coefficient(cfg, 1060.0) * cfg.fluorophore.sigma_c2pa * 4e-6 == pytest.approx(f, rel=1e-13)


def test_c2pef_refuses_broadband():
    with pytest.raises(TypeError):
        c2pef_signal(presets.lds798_hba_experiment(), presets.spdc_source())


def test_c2pef_zero_cross_section():
    cfg = presets.rh6g_c2pa_experiment(sigma_gm=0.0)
    assert c2pef_signal(cfg, Monochromatic(1060.0, 1e-3)) == 0.0


def test_eq2_vs_eq1_ratio():
    # the Gaussian-beam model and the flat-top rate equation differ by prefactor/0.5
    cfg = presets.lds798_c2pa_experiment()
    p = 0.1
    phi = photon_flux(p, 1060.0, cfg.beam_area)
    ratio = c2pef_signal(cfg, Monochromatic(1060.0, p)) / total_signal(cfg, phi, 0.0)
    assert ratio == pytest.approx(GAUSSIAN_2P_PREFACTOR / 0.5, rel=1e-12)


def test_total_signal_pure_terms():
    cfg = presets.lds798_c2pa_experiment()
    nk = cfg.n_molecules * cfg.efficiency
    assert total_signal(cfg, 1e20, 1e-25) == pytest.approx(
        nk * 1e-25 * 1e20 + 0.5 * nk * 220 * GM * 1e40, rel=1e-14)
    assert total_signal(cfg, 0.0, 1e-25) == 0.0
    out = total_signal(cfg, np.array([1e19, 2e19]), 0.0)
    assert out[1] == pytest.approx(4 * out[0], rel=1e-14)


def test_total_signal_crossover_identity():
    cfg = presets.lds798_c2pa_experiment()
    phi_c = 2.167e21
    sigma_hba = 0.5 * cfg.fluorophore.sigma_c2pa * phi_c
    nk = cfg.n_molecules * cfg.efficiency
    assert nk * sigma_hba * phi_c == pytest.approx(0.5 * nk * cfg.fluorophore.sigma_c2pa * phi_c ** 2)


def test_total_signal_rejects_negative():
    with pytest.raises(ValueError):
        total_signal(presets.lds798_c2pa_experiment(), -1.0, 0.0)


def test_gamma_overlap_cases():
    grid = np.linspace(600, 900, 301)
    e = gaussian_spectrum(750, 50, grid)
    assert gamma_overlap(e, CollectionChain()) == 1.0
    full = Spectrum(grid, np.ones_like(grid), SpectrumKind.TRANSMISSION)
    assert gamma_overlap(e, CollectionChain(filters=(full,))) == pytest.approx(1.0, rel=1e-12)
    half = Spectrum(grid, 0.5 * np.ones_like(grid), SpectrumKind.TRANSMISSION)
    qe = Spectrum(grid, 0.2 * np.ones_like(grid), SpectrumKind.QUANTUM_EFFICIENCY)
    g = gamma_overlap(e, CollectionChain(filters=(half,), pmt_qe=qe))
    assert g == pytest.approx(0.1, rel=1e-12)
    # a filter passing only the red half of a symmetric band
    red = Spectrum(np.linspace(750, 900, 151), np.ones(151), SpectrumKind.TRANSMISSION)
    assert gamma_overlap(e, CollectionChain(filters=(red,))) == pytest.approx(0.5, rel=1e-3)


def test_experiment_gamma_from_spectra_when_not_given():
    f = presets.lds798()
    grid = np.linspace(500, 1200, 701)
    flt = Spectrum(grid, 0.3 * np.ones_like(grid), SpectrumKind.TRANSMISSION)
    cfg = ExperimentConfig(f, 1e-4, 1.0, presets.LASER_BEAM, CollectionChain(filters=(flt,)))
    assert cfg.gamma == pytest.approx(0.3, rel=1e-9)


def test_experiment_number_density():
    cfg = presets.rh6g_c2pa_experiment()
    assert cfg.number_density == pytest.approx(6.02214076e23 * 1.1e-6, rel=1e-15)


# -- broadband sources and HBA -------------------------------------------------

def test_broadband_requires_matching_integral():
    shape = gaussian_spectrum(1077.4, 128.9, np.linspace(700, 1600, 901),
                              SpectrumKind.SPECTRAL_POWER_DENSITY)
    with pytest.raises(ValueError):
        Broadband(shape, 1.0)
    src = Broadband.from_shape(shape, 40e-9)
    assert integrate(src.density) == pytest.approx(40e-9, rel=1e-12)


def test_monochromatic_density_integrates_to_power():
    src = Monochromatic(1060.0, 2e-3)
    assert integrate(src.density()) == pytest.approx(2e-3, rel=1e-6)


def test_hba_linear_in_power(lds798_hba):
    a = hba_signal(lds798_hba, presets.laser(1e-3))
    b = hba_signal(lds798_hba, presets.laser(3e-3))
    assert b == pytest.approx(3 * a, rel=1e-12)
    assert hba_signal(lds798_hba, presets.laser(0.0)) == 0.0


def test_hba_laser_matches_point_evaluation(lds798_hba):
    # a 1 nm line behaves like a delta function at its center
    from hbasim.photophysics import hba_cross_section
    from hbasim.spectra import wavelength_to_frequency
    nu = wavelength_to_frequency(1060.0)
    sigma = hba_cross_section(nu, lds798_hba.temperature, lds798_hba.fluorophore)
    phi = photon_flux(1e-3, 1060.0, lds798_hba.beam_area)
    point = lds798_hba.n_molecules * lds798_hba.efficiency * sigma * phi
    assert hba_signal(lds798_hba, presets.laser(1e-3)) == pytest.approx(point, rel=1e-3)


def test_hba_broadband_matches_direct_quadrature(lds798_hba):
    from scipy.integrate import quad
    from hbasim.constants import C, H
    from hbasim.photophysics import hba_cross_section
    sigma_g = 128.9 / (2 * math.sqrt(2 * math.log(2)))

    def g(lam):
        return math.exp(-0.5 * ((lam - 1077.4) / sigma_g) ** 2)

    # the preset density is normalized to 40 nW over its 700-1600 nm grid
    norm = 40e-9 / quad(g, 700, 1600, epsabs=0, epsrel=1e-12)[0]

    def integrand(lam):
        nu = C / (lam * 1e-9)
        sigma = hba_cross_section(nu, lds798_hba.temperature, lds798_hba.fluorophore)
        return sigma * norm * g(lam) / (H * nu)    # per nm, no Jacobian needed

    val, _ = quad(integrand, 850, 1600, epsabs=0, epsrel=1e-7, limit=500)
    expected = lds798_hba.efficiency * lds798_hba.number_density * lds798_hba.path_length * val
    assert hba_signal(lds798_hba, presets.spdc_source()) == pytest.approx(expected, rel=1e-4)


def test_hba_blue_cutoff_override(lds798_hba):
    src = presets.spdc_source(blue_cutoff=None)
    a = hba_signal(lds798_hba, src, blue_cutoff=850.0)
    b = hba_signal(lds798_hba, presets.spdc_source(blue_cutoff=850.0))
    assert a == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("T", [290.0, 310.0])
def test_hba_rises_with_temperature(T):
    lo = hba_signal(presets.lds798_hba_experiment(T), presets.laser(1e-3))
    hi = hba_signal(presets.lds798_hba_experiment(T + 10), presets.laser(1e-3))
    assert hi > lo


# -- E2PA toy ------------------------------------------------------------------

def test_e2pa_pair_survival_quadratic():
    cfg = presets.lds798_hba_experiment()
    a = e2pa_signal_toy(cfg, 1e12, 1e-21, 0.5)
    b = e2pa_signal_toy(cfg, 1e12, 1e-21, 0.25)
    assert a == pytest.approx(4 * b, rel=1e-14)
    assert e2pa_signal_toy(cfg, 2e12, 1e-21, 0.5) == pytest.approx(2 * a, rel=1e-14)
    with pytest.raises(ValueError):
        e2pa_signal_toy(cfg, 1e12, 1e-21, 1.5)


# -- simulation -------------------------------------------------------------

POWERS = np.linspace(1e-4, 2e-3, 8)


def test_simulate_noise_free_c2pa(rh6g):
    s = simulate_power_series(rh6g, "C2PA", "pump_power", POWERS)
    expected = [c2pef_signal(rh6g, Monochromatic(1060.0, p)) for p in POWERS]
    np.testing.assert_allclose(s.rate, expected, rtol=1e-15)
    assert np.all(s.rate_err == 0)
    assert s.sweep_kind is SweepKind.PUMP_POWER


def test_simulate_mixed_reproduces_total_signal(lds798_hba):
    s = simulate_power_series(lds798_hba, "mixed", "pump_power", POWERS, sigma_hba=1e-30)
    phi = POWERS * s.flux_per_watt
    np.testing.assert_allclose(s.rate, total_signal(lds798_hba, phi, 1e-30), rtol=1e-14)


def test_simulate_seed_reproducible(rh6g):
    a = simulate_power_series(rh6g, "C2PA", "pump_power", POWERS, noise_seed=7)
    b = simulate_power_series(rh6g, "C2PA", "pump_power", POWERS, noise_seed=7)
    c = simulate_power_series(rh6g, "C2PA", "pump_power", POWERS, noise_seed=8)
    np.testing.assert_array_equal(a.rate, b.rate)
    assert not np.array_equal(a.rate, c.rate)


def test_simulate_point_streams_independent_of_length(rh6g):
    # point i draws from child i, so prefix series agree
    a = simulate_power_series(rh6g, "C2PA", "pump_power", POWERS, noise_seed=3)
    b = simulate_power_series(rh6g, "C2PA", "pump_power", POWERS[:5], noise_seed=3)
    np.testing.assert_array_equal(a.rate[:5], b.rate)


def test_simulate_poisson_statistics(rh6g):
    powers = np.array([1e-3, 1.5e-3, 2e-3])
    expected = simulate_power_series(rh6g, "C2PA", "pump_power", powers, dwell=1.0).rate
    draws = np.array([simulate_power_series(rh6g, "C2PA", "pump_power", powers, dwell=1.0,
                                            background_rate=0.0, noise_seed=s).rate
                      for s in range(10000)])
    mean, var = draws.mean(axis=0), draws.var(axis=0, ddof=1)
    se_mean = np.sqrt(expected / 10000)
    assert np.all(np.abs(mean - expected) < 4 * se_mean)
    # variance of a Poisson mean of lambda: relative SE ~ sqrt(2/n)
    np.testing.assert_allclose(var, expected, rtol=4 * math.sqrt(2 / 10000))


def test_simulate_clamps_negative_rates(rh6g):
    # tiny signal under a large background: some points go negative and are clamped
    s = simulate_power_series(rh6g, "C2PA", "pump_power", np.linspace(1e-6, 1e-5, 30),
                              dwell=1.0, background_rate=500.0, noise_seed=1)
    assert s.clamped
    assert np.all(s.rate >= 0)
    assert all(s.rate[i] == 0 for i in s.clamped)


def test_simulate_validation(rh6g):
    with pytest.raises(ValueError):
        simulate_power_series(rh6g, "C2PA", "pump_power", [2e-3, 1e-3, 3e-3])
    with pytest.raises(ValueError):
        simulate_power_series(rh6g, "C2PA", "pump_power", [])
    with pytest.raises(ValueError):
        simulate_power_series(rh6g, "quantum", "pump_power", POWERS)
    with pytest.raises(ValueError):
        simulate_power_series(rh6g, "E2PA", "pump_power", POWERS)
    with pytest.raises(ValueError):
        simulate_power_series(rh6g, "C2PA", "sideways", POWERS)


def test_simulate_e2pa_slopes(lds798_hba):
    src = presets.spdc_source()
    pump = simulate_power_series(lds798_hba, "E2PA", "pump_power", POWERS, source=src,
                                 sigma_e2pa=1e-18)
    att = simulate_power_series(lds798_hba, "E2PA", "post_attenuation", POWERS, source=src,
                                sigma_e2pa=1e-18)
    sp = np.polyfit(np.log(POWERS), np.log(pump.rate), 1)[0]
    sa = np.polyfit(np.log(POWERS), np.log(att.rate), 1)[0]
    assert sp == pytest.approx(1.0, abs=1e-12)
    assert sa == pytest.approx(2.0, abs=1e-12)
    assert pump.rate[-1] == pytest.approx(att.rate[-1], rel=1e-12)
