"""One-photon cross sections from thermally populated ground-state levels.

The hot-band cross section at an excitation frequency below the 0-0
transition is the 0-0 cross section attenuated by a Boltzmann factor and
corrected by a Franck-Condon ratio read off the absorption spectrum at the
frequency reflected about the 0-0 transition.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constants import EPSILON_TO_SIGMA, GM, H, K_B
from .spectra import (
    OutOfDomainError,
    Spectrum,
    SpectrumError,
    frequency_to_wavelength,
    normalize_peak,
    union_grid,
    wavelength_to_frequency,
)


@dataclass(frozen=True, eq=False)
class Fluorophore:
    """Photophysical record of a dye.

    ``sigma_c2pa`` is in cm^4 s / photon; ``nu_max`` in Hz; ``epsilon_max``
    in M^-1 cm^-1. Spectra and the 0-0 data are optional because the
    two-photon calculations do not need them.
    """

    name: str
    eta: float
    sigma_c2pa: float = 0.0
    epsilon_max: float | None = None
    nu_max: float | None = None
    absorption: Spectrum | None = None
    emission: Spectrum | None = None

    def __post_init__(self):
        if not 0 < self.eta <= 1:
            raise ValueError("quantum yield must lie in (0, 1]")
        if self.sigma_c2pa < 0:
            raise ValueError("two-photon cross section must be non-negative")
        if self.epsilon_max is not None and not self.epsilon_max > 0:
            raise ValueError("epsilon_max must be positive")
        if self.nu_max is not None:
            if not self.nu_max > 0:
                raise ValueError("nu_max must be positive")
            if self.absorption is not None:
                lo, hi = self.absorption.span
                lam = frequency_to_wavelength(self.nu_max)
                if not lo <= lam <= hi:
                    raise ValueError("nu_max lies outside the absorption spectrum")

    @property
    def sigma_c2pa_gm(self) -> float:
        return self.sigma_c2pa / GM

    @property
    def sigma_max(self) -> float:
        if self.epsilon_max is None:
            raise ValueError(f"{self.name}: epsilon_max not set")
        return sigma_max_from_epsilon(self.epsilon_max)


def sigma_max_from_epsilon(epsilon_max: float) -> float:
    """Cross section in cm^2 from a decadic molar extinction coefficient."""
    if not np.isfinite(epsilon_max) or epsilon_max <= 0:
        raise ValueError("extinction coefficient must be positive")
    return epsilon_max * EPSILON_TO_SIGMA


def find_nu_max(absorption: Spectrum, emission: Spectrum) -> float:
    """0-0 transition frequency from the crossing of peak-normalized profiles.

    The search runs between the absorption and emission maxima; with several
    crossings the one at the longest wavelength wins.
    """
    a = normalize_peak(absorption)
    e = normalize_peak(emission)
    lam_a = float(a.grid[np.argmax(a.values)])
    lam_e = float(e.grid[np.argmax(e.values)])
    lo, hi = min(lam_a, lam_e), max(lam_a, lam_e)
    if lo == hi:
        return wavelength_to_frequency(lo)
    try:
        grid = union_grid(a, e)
    except SpectrumError as exc:
        raise SpectrumError("absorption and emission do not overlap") from exc
    w_lo, w_hi = max(lo, grid[0]), min(hi, grid[-1])
    if not w_lo < w_hi:
        raise SpectrumError("no overlap between the absorption and emission peaks")
    grid = np.unique(np.concatenate([grid[(grid >= w_lo) & (grid <= w_hi)], [w_lo, w_hi]]))
    d = a(grid) - e(grid)
    for i in range(len(grid) - 1, 0, -1):
        if d[i] == 0.0:
            return wavelength_to_frequency(grid[i])
        if np.sign(d[i]) != np.sign(d[i - 1]):
            if d[i - 1] == 0.0:
                return wavelength_to_frequency(grid[i - 1])
            t = d[i - 1] / (d[i - 1] - d[i])
            return wavelength_to_frequency(grid[i - 1] + t * (grid[i] - grid[i - 1]))
    raise SpectrumError("normalized absorption and emission never cross")


def fc_ratio(nu, absorption: Spectrum, nu_max: float):
    """Franck-Condon ratio A(2*nu_max - nu) / A(nu_max)."""
    nu = np.asarray(nu, dtype=float)
    reflected = 2.0 * nu_max - nu
    if np.any(reflected <= 0):
        raise OutOfDomainError("reflected frequency is non-positive")
    try:
        a_ref = absorption(frequency_to_wavelength(reflected))
    except OutOfDomainError as exc:
        raise OutOfDomainError(
            "reflected frequency falls outside the measured absorption spectrum") from exc
    a0 = absorption(frequency_to_wavelength(nu_max))
    if a0 <= 0:
        raise SpectrumError("absorption vanishes at nu_max")
    out = a_ref / a0
    return float(out) if np.ndim(out) == 0 else out


def boltzmann_factor(nu, nu_max: float, temperature: float):
    """exp(-h (nu_max - nu) / kT)."""
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    out = np.exp(-H * (nu_max - np.asarray(nu, dtype=float)) / (K_B * temperature))
    return float(out) if np.ndim(out) == 0 else out


def hba_cross_section(nu, temperature: float, f: Fluorophore, fc=None):
    """Hot-band one-photon cross section in cm^2 at frequency ``nu`` (Hz).

    ``fc`` overrides the Franck-Condon ratio (a constant or array); by default
    it is computed from ``f.absorption``.
    """
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    if f.nu_max is None:
        raise ValueError(f"{f.name}: nu_max not set")
    nu = np.asarray(nu, dtype=float)
    if np.any(nu > f.nu_max * (1 + 1e-12)):
        raise ValueError("hot-band model requires nu <= nu_max")
    if fc is None:
        if f.absorption is None:
            raise ValueError(f"{f.name}: absorption spectrum needed for FC ratio")
        fc = fc_ratio(nu, f.absorption, f.nu_max)
    out = f.sigma_max * boltzmann_factor(nu, f.nu_max, temperature) * np.asarray(fc, dtype=float)
    return float(out) if np.ndim(out) == 0 else out
