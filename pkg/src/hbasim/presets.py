"""Parameter sets for the Rh6G and LDS798 measurements.

LDS798 absorption and emission curves are not tabulated here; the band used
below is a frequency-Gaussian calibrated so that its Franck-Condon ratio
spans 0.41-2.65 over 200-361.4 THz with the 0-0 transition at 672 nm.
"""
from __future__ import annotations

import numpy as np

from .constants import GM
from .photophysics import Fluorophore
from .signal_model import BeamGeometry, Broadband, CollectionChain, ExperimentConfig, Monochromatic
from .spectra import SpectrumKind, wavelength_to_frequency
from .synthetic import calibrated_band, gaussian_spectrum, mirror_image_pair

LASER_BEAM = BeamGeometry(55.0, 57.0, rayleigh_range=6400.0)
LASER_WAVELENGTH = 1060.0

SPDC_CENTER = 1077.4
SPDC_FWHM = 128.9
SPDC_BLUE_CUTOFF = 850.0
SPDC_POWER_AT_SAMPLE = 40e-9

LDS798_NU_MAX = wavelength_to_frequency(672.0)
LDS798_EPSILON_MAX = 1.54e4
LDS798_FC_RANGE = (0.41, 2.65)
LDS798_FC_WINDOW = (200e12, 361.4e12)


def rh6g(sigma_gm: float = 9.9) -> Fluorophore:
    return Fluorophore("Rh6G", eta=0.9, sigma_c2pa=sigma_gm * GM)


def lds798_spectra(absorption_grid=None, emission_grid=None):
    if absorption_grid is None:
        absorption_grid = np.linspace(380.0, 1000.0, 2481)
    if emission_grid is None:
        emission_grid = np.linspace(500.0, 1200.0, 2801)
    center, sigma = calibrated_band(LDS798_NU_MAX, LDS798_FC_RANGE, LDS798_FC_WINDOW)
    return mirror_image_pair(LDS798_NU_MAX, center, sigma, absorption_grid, emission_grid)


def lds798(sigma_gm: float = 220.0) -> Fluorophore:
    absorption, emission = lds798_spectra()
    return Fluorophore("LDS798", eta=0.054, sigma_c2pa=sigma_gm * GM,
                       epsilon_max=LDS798_EPSILON_MAX, nu_max=LDS798_NU_MAX,
                       absorption=absorption, emission=emission)


def rh6g_c2pa_experiment(sigma_gm: float = 9.9, kappa: float = 0.042) -> ExperimentConfig:
    return ExperimentConfig(rh6g(sigma_gm), concentration=1.1e-3, path_length=1.0,
                            beam=LASER_BEAM, collection=CollectionChain(kappa=kappa, gamma=0.075))


def lds798_c2pa_experiment(sigma_gm: float = 220.0, temperature: float = 298.15) -> ExperimentConfig:
    return ExperimentConfig(lds798(sigma_gm), concentration=0.1e-3, path_length=1.0,
                            beam=LASER_BEAM, collection=CollectionChain(gamma=0.018),
                            temperature=temperature)


def lds798_hba_experiment(temperature: float = 298.15) -> ExperimentConfig:
    """The 0.3 mM sample with the filter set used for the SPDC runs."""
    return ExperimentConfig(lds798(), concentration=0.3e-3, path_length=1.0,
                            beam=LASER_BEAM, collection=CollectionChain(gamma=0.025),
                            temperature=temperature)


def laser(power: float = 1e-3, wavelength: float = LASER_WAVELENGTH) -> Monochromatic:
    return Monochromatic(wavelength, power)


def spdc_source(power: float = SPDC_POWER_AT_SAMPLE, blue_cutoff: float | None = SPDC_BLUE_CUTOFF,
                grid=None) -> Broadband:
    """Gaussian SPDC density (1077.4 nm, 128.9 nm FWHM)."""
    if grid is None:
        grid = np.linspace(700.0, 1600.0, 3601)
    shape = gaussian_spectrum(SPDC_CENTER, SPDC_FWHM, grid, SpectrumKind.SPECTRAL_POWER_DENSITY)
    return Broadband.from_shape(shape, power, blue_cutoff)
