"""Analytic spectra for simulations and tests."""
from __future__ import annotations

import math

import numpy as np

from .spectra import FWHM_PER_SIGMA, Spectrum, SpectrumKind, wavelength_to_frequency


def gaussian_spectrum(center: float, fwhm: float, grid, kind=SpectrumKind.EMISSION,
                      amplitude: float = 1.0) -> Spectrum:
    """Gaussian in wavelength sampled on ``grid`` (nm)."""
    grid = np.asarray(grid, dtype=float)
    sigma = fwhm / FWHM_PER_SIGMA
    return Spectrum(grid, amplitude * np.exp(-0.5 * ((grid - center) / sigma) ** 2), kind)


def frequency_gaussian_spectrum(center_hz: float, sigma_hz: float, grid,
                                kind=SpectrumKind.ABSORPTION, amplitude: float = 1.0) -> Spectrum:
    """Gaussian in frequency, sampled on a wavelength ``grid`` (nm)."""
    grid = np.asarray(grid, dtype=float)
    nu = wavelength_to_frequency(grid)
    return Spectrum(grid, amplitude * np.exp(-0.5 * ((nu - center_hz) / sigma_hz) ** 2), kind)


def calibrated_band(nu_max: float, fc_range: tuple[float, float],
                    nu_window: tuple[float, float]) -> tuple[float, float]:
    """Center and width (Hz) of a frequency-Gaussian absorption band.

    The band is chosen so that the Franck-Condon ratio A(2 nu_max - nu)/A(nu_max)
    peaks at ``fc_range[1]`` and drops to ``fc_range[0]`` at the end of
    ``nu_window`` farthest from the band center.
    """
    fc_lo, fc_hi = fc_range
    ref_hi = 2 * nu_max - nu_window[0]      # bluest reflected frequency
    q_max = math.log(fc_hi)                 # (nu_max - c)^2 / 2 s^2
    q_end = math.log(fc_hi / fc_lo)         # (ref_hi - c)^2 / 2 s^2
    ratio = math.sqrt(q_end / q_max)
    d1 = (ref_hi - nu_max) / (1 + ratio)
    center = nu_max + d1
    sigma = d1 / math.sqrt(2 * q_max)
    return center, sigma


def mirror_image_pair(nu_max: float, center: float, sigma: float,
                      absorption_grid, emission_grid) -> tuple[Spectrum, Spectrum]:
    """Absorption band and its mirror-image emission band about ``nu_max``.

    Peak-normalized, the two cross exactly at ``nu_max``.
    """
    absorption = frequency_gaussian_spectrum(center, sigma, absorption_grid, SpectrumKind.ABSORPTION)
    emission = frequency_gaussian_spectrum(2 * nu_max - center, sigma, emission_grid,
                                           SpectrumKind.EMISSION)
    return absorption, emission
