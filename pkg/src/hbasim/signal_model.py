"""Forward models of detected fluorescence count rates.

Units are cgs throughout: concentration enters as a number density in
cm^-3, path length in cm, beam area in cm^2, one-photon cross sections in
cm^2 and two-photon cross sections in cm^4 s. Powers are in W.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .constants import C, DEFAULT_TEMPERATURE, GAUSSIAN_2P_PREFACTOR, H, N_A
from .photophysics import Fluorophore, hba_cross_section
from .series import Axis, PowerSeries, SweepKind
from .spectra import (
    FWHM_PER_SIGMA,
    Spectrum,
    SpectrumError,
    SpectrumKind,
    common_window,
    integrate,
    photon_energy,
    truncate_blue,
    union_grid,
    wavelength_to_frequency,
)

DEFAULT_KAPPA = 0.042
DEFAULT_BACKGROUND = 4.0          # counts/s
DEFAULT_LINEWIDTH = 1.0           # nm FWHM
DEFAULT_EFFECTIVE_WAVELENGTH = 1064.0
DEFAULT_PHOTON_TRANSMISSION = 0.176
RNG_NAME = "numpy.random.PCG64 (SeedSequence.spawn per point)"

MECHANISMS = ("HBA", "C2PA", "mixed", "E2PA")


@dataclass(frozen=True)
class BeamGeometry:
    fwhm_x: float                       # um
    fwhm_y: float                       # um
    rayleigh_range: float | None = None  # um, informational

    def __post_init__(self):
        if not (self.fwhm_x > 0 and self.fwhm_y > 0):
            raise ValueError("beam FWHMs must be positive")


@dataclass(frozen=True, eq=False)
class CollectionChain:
    """Detection path. ``gamma`` short-circuits the spectral overlap when given."""

    kappa: float = DEFAULT_KAPPA
    filters: tuple[Spectrum, ...] = ()
    pmt_qe: Spectrum | None = None
    gamma: float | None = None

    def __post_init__(self):
        if not 0 < self.kappa <= 1:
            raise ValueError("kappa must lie in (0, 1]")
        if self.gamma is not None and not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        object.__setattr__(self, "filters", tuple(self.filters))


@dataclass(frozen=True)
class Monochromatic:
    wavelength: float                       # nm
    total_power: float = 0.0                # W
    linewidth_fwhm: float = DEFAULT_LINEWIDTH

    def __post_init__(self):
        if not self.wavelength > 0 or not self.linewidth_fwhm > 0:
            raise ValueError("wavelength and linewidth must be positive")
        if self.total_power < 0:
            raise ValueError("power must be non-negative")

    @property
    def flux_wavelength(self) -> float:
        return self.wavelength

    def with_power(self, power: float) -> "Monochromatic":
        return Monochromatic(self.wavelength, power, self.linewidth_fwhm)

    def density(self, points: int = 401, half_span_fwhm: float = 4.0) -> Spectrum:
        """Gaussian line shape (W/nm) carrying ``total_power``."""
        half = half_span_fwhm * self.linewidth_fwhm
        grid = np.linspace(self.wavelength - half, self.wavelength + half, points)
        shape = np.exp(-0.5 * ((grid - self.wavelength) * FWHM_PER_SIGMA / self.linewidth_fwhm) ** 2)
        shape = Spectrum(grid, shape, SpectrumKind.SPECTRAL_POWER_DENSITY)
        return shape.scaled(self.total_power / integrate(shape))


@dataclass(frozen=True, eq=False)
class Broadband:
    """Broadband source given as a spectral power density in W/nm.

    ``blue_cutoff`` (nm) is a long-pass edge applied in front of the sample.
    """

    density: Spectrum
    total_power: float
    blue_cutoff: float | None = None
    effective_wavelength: float = DEFAULT_EFFECTIVE_WAVELENGTH

    def __post_init__(self):
        if self.density.kind is not SpectrumKind.SPECTRAL_POWER_DENSITY:
            raise ValueError("broadband density must be a spectral_power_density spectrum")
        if self.total_power < 0:
            raise ValueError("power must be non-negative")
        total = integrate(self.density)
        if not math.isclose(total, self.total_power, rel_tol=1e-6, abs_tol=1e-300):
            raise ValueError(f"density integrates to {total:g} W, not {self.total_power:g} W")

    @classmethod
    def from_shape(cls, shape: Spectrum, total_power: float, blue_cutoff: float | None = None,
                   effective_wavelength: float = DEFAULT_EFFECTIVE_WAVELENGTH) -> "Broadband":
        norm = integrate(shape)
        if norm <= 0:
            raise SpectrumError("source spectrum integrates to zero")
        density = Spectrum(shape.grid, shape.values * (total_power / norm),
                           SpectrumKind.SPECTRAL_POWER_DENSITY)
        return cls(density, total_power, blue_cutoff, effective_wavelength)

    @property
    def flux_wavelength(self) -> float:
        return self.effective_wavelength

    def with_power(self, power: float) -> "Broadband":
        return Broadband.from_shape(self.density, power, self.blue_cutoff,
                                    self.effective_wavelength)

    def with_cutoff(self, blue_cutoff: float | None) -> "Broadband":
        return Broadband(self.density, self.total_power, blue_cutoff, self.effective_wavelength)


ExcitationSource = Union[Monochromatic, Broadband]


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    fluorophore: Fluorophore
    concentration: float            # mol/L
    path_length: float              # cm
    beam: BeamGeometry
    collection: CollectionChain
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self):
        if not (self.concentration > 0 and self.path_length > 0 and self.temperature > 0):
            raise ValueError("concentration, path length and temperature must be positive")

    @property
    def number_density(self) -> float:
        """Molecules per cm^3."""
        return N_A * self.concentration * 1e-3

    @property
    def beam_area(self) -> float:
        return beam_area(self.beam)

    @property
    def n_molecules(self) -> float:
        """Molecules in the excitation volume, N_mol * L * S."""
        return self.number_density * self.path_length * self.beam_area

    @property
    def gamma(self) -> float:
        if self.collection.gamma is not None:
            return self.collection.gamma
        if self.fluorophore.emission is None:
            raise ValueError("gamma needs either an explicit value or an emission spectrum")
        return gamma_overlap(self.fluorophore.emission, self.collection)

    @property
    def efficiency(self) -> float:
        """Overall detection efficiency K = gamma * kappa * eta."""
        return self.gamma * self.collection.kappa * self.fluorophore.eta


def beam_area(b: BeamGeometry) -> float:
    """Elliptical area from the two FWHMs, in cm^2."""
    return math.pi * (b.fwhm_x / 2.0) * (b.fwhm_y / 2.0) * 1e-8


def photon_flux(power: float, wavelength: float, area: float) -> float:
    """Photons per cm^2 per s for ``power`` W at ``wavelength`` nm over ``area`` cm^2."""
    if not (power > 0 and wavelength > 0 and area > 0):
        raise ValueError("power, wavelength and area must be positive")
    return power / photon_energy(wavelength_to_frequency(wavelength)) / area


def gamma_overlap(emission: Spectrum, chain: CollectionChain) -> float:
    """Fraction of the emission passed by the filters and registered by the PMT.

    Outside the tabulated range of the filters/QE curve nothing is counted.
    """
    parts = list(chain.filters) + ([chain.pmt_qe] if chain.pmt_qe is not None else [])
    if not parts:
        return 1.0
    try:
        window = common_window(emission, *parts)
    except SpectrumError as exc:
        raise SpectrumError("emission and collection curves do not overlap") from exc
    grid = union_grid(emission, *parts, window=window)
    product = emission(grid)
    for sp in parts:
        product = product * sp(grid)
    total = integrate(emission)
    if total <= 0:
        raise SpectrumError("emission spectrum integrates to zero")
    return float(np.trapezoid(product, grid) / total)


def c2pef_signal(cfg: ExperimentConfig, src: ExcitationSource) -> float:
    """Two-photon excited fluorescence (counts/s) for a Gaussian CW beam."""
    if not isinstance(src, Monochromatic):
        raise TypeError("two-photon signal is only modeled for monochromatic excitation")
    n_ph = src.total_power / photon_energy(wavelength_to_frequency(src.wavelength))
    return (GAUSSIAN_2P_PREFACTOR * cfg.efficiency * cfg.number_density * cfg.path_length
            * cfg.fluorophore.sigma_c2pa / cfg.beam_area * n_ph ** 2)


def c2pef_coefficient(cfg: ExperimentConfig, wavelength: float) -> float:
    """Counts/s per (W^2 * cm^4 s) so that F2 = coeff * sigma * P^2."""
    hv = photon_energy(wavelength_to_frequency(wavelength))
    return (GAUSSIAN_2P_PREFACTOR * cfg.efficiency * cfg.number_density * cfg.path_length
            / cfg.beam_area / hv ** 2)


def _photon_rate_density(density: Spectrum):
    """Frequency grid (ascending, Hz) and photon flux density (photons/s/Hz)."""
    lam = density.grid[::-1]
    p_lam = density.values[::-1]                 # W/nm
    nu = wavelength_to_frequency(lam)
    p_nu = p_lam * 1e9 * (lam * 1e-9) ** 2 / C   # W/Hz, |dlambda/dnu| = lambda^2/c
    return nu, p_nu / (H * nu)


def hba_signal(cfg: ExperimentConfig, src: ExcitationSource,
               blue_cutoff: float | None = None) -> float:
    """Hot-band one-photon fluorescence (counts/s).

    The density is integrated over frequency. ``blue_cutoff`` (nm) overrides
    the source's own long-pass edge; without any cutoff every bin must fall
    inside the range where the Franck-Condon ratio is defined.
    """
    if isinstance(src, Monochromatic):
        density = src.density()
        cutoff = blue_cutoff
    else:
        density = src.density
        cutoff = blue_cutoff if blue_cutoff is not None else src.blue_cutoff
    if cutoff is not None:
        density = truncate_blue(density, cutoff)
    if src.total_power == 0:
        return 0.0
    nu, photons = _photon_rate_density(density)
    sigma = hba_cross_section(nu, cfg.temperature, cfg.fluorophore)
    rate = np.trapezoid(sigma * photons, nu)
    return float(cfg.efficiency * cfg.number_density * cfg.path_length * rate)


def total_signal(cfg: ExperimentConfig, phi, sigma_hba: float):
    """F = N K sigma_HBA phi + 1/2 N K sigma_C2PA phi^2."""
    phi = np.asarray(phi, dtype=float)
    if np.any(phi < 0) or sigma_hba < 0:
        raise ValueError("flux and sigma_hba must be non-negative")
    nk = cfg.n_molecules * cfg.efficiency
    out = nk * sigma_hba * phi + 0.5 * nk * cfg.fluorophore.sigma_c2pa * phi ** 2
    return float(out) if out.ndim == 0 else out


def e2pa_signal_toy(cfg: ExperimentConfig, pair_rate, sigma_e2pa: float,
                    post_source_transmission: float):
    """Phenomenological entangled-pair channel, linear in surviving pairs.

    A pair survives attenuation with probability t**2.
    """
    t = post_source_transmission
    if not 0 <= t <= 1:
        raise ValueError("transmission must lie in [0, 1]")
    pair_rate = np.asarray(pair_rate, dtype=float)
    surviving = pair_rate * t ** 2
    out = cfg.efficiency * cfg.n_molecules * sigma_e2pa * surviving / cfg.beam_area
    return float(out) if out.ndim == 0 else out


def _expected_rates(cfg, mechanism, sweep, powers, src, sigma_hba, sigma_e2pa, transmission):
    if mechanism == "C2PA":
        return np.array([c2pef_signal(cfg, src.with_power(p)) for p in powers])
    if mechanism == "HBA":
        return np.array([hba_signal(cfg, src.with_power(p)) for p in powers])
    if mechanism == "mixed":
        if sigma_hba is None:
            sigma_hba = hba_cross_section(wavelength_to_frequency(src.flux_wavelength),
                                          cfg.temperature, cfg.fluorophore)
        phi = powers * photon_flux(1.0, src.flux_wavelength, cfg.beam_area)
        return total_signal(cfg, phi, sigma_hba)
    if mechanism == "E2PA":
        if sigma_e2pa is None:
            raise ValueError("E2PA simulation needs sigma_e2pa")
        if not 0 < transmission <= 1:
            raise ValueError("photon transmission must lie in (0, 1]")
        pair_energy = 2.0 * photon_energy(wavelength_to_frequency(src.flux_wavelength))
        if sweep is SweepKind.PUMP_POWER:
            pair_rate = powers / transmission / pair_energy
            return e2pa_signal_toy(cfg, pair_rate, sigma_e2pa, transmission)
        # pump fixed at the level giving the highest power; ND filter after the crystal
        pair_rate = powers[-1] / transmission / pair_energy
        t = transmission * powers / powers[-1]
        return np.array([e2pa_signal_toy(cfg, pair_rate, sigma_e2pa, ti) for ti in t])
    raise ValueError(f"unknown mechanism {mechanism!r}; expected one of {MECHANISMS}")


def simulate_power_series(cfg: ExperimentConfig, mechanism: str, sweep, powers: Sequence[float],
                          dwell=100.0, background_rate: float = DEFAULT_BACKGROUND,
                          noise_seed: int | None = None, *,
                          source: ExcitationSource | None = None,
                          sigma_hba: float | None = None,
                          sigma_e2pa: float | None = None,
                          transmission: float = DEFAULT_PHOTON_TRANSMISSION) -> PowerSeries:
    """Synthesize a background-subtracted power series.

    ``powers`` are powers at the sample (W). Without a seed the expected
    rates are returned unchanged. With a seed, signal+background counts and
    a separate background measurement of the same dwell are drawn from
    Poisson distributions and subtracted; every point draws from its own
    child of ``SeedSequence(noise_seed)``.
    """
    sweep = SweepKind(sweep)
    powers = np.asarray(powers, dtype=float)
    if powers.size == 0:
        raise ValueError("empty power list")
    if np.any(powers <= 0) or np.any(np.diff(powers) <= 0):
        raise ValueError("powers must be positive and ascending")
    if background_rate < 0:
        raise ValueError("background rate must be non-negative")
    if source is None:
        source = Monochromatic(1060.0)
    dwell = np.broadcast_to(np.asarray(dwell, dtype=float), powers.shape).copy()
    expected = np.asarray(_expected_rates(cfg, mechanism, sweep, powers, source,
                                          sigma_hba, sigma_e2pa, transmission), dtype=float)

    meta = {"mechanism": mechanism}
    if noise_seed is None:
        rate, err, clamped = expected, np.zeros_like(expected), ()
    else:
        children = np.random.SeedSequence(noise_seed).spawn(len(powers))
        rate = np.empty_like(expected)
        err = np.empty_like(expected)
        for i, child in enumerate(children):
            rng = np.random.Generator(np.random.PCG64(child))
            total = rng.poisson((expected[i] + background_rate) * dwell[i])
            bg = rng.poisson(background_rate * dwell[i])
            rate[i] = (total - bg) / dwell[i]
            err[i] = math.sqrt(total + bg) / dwell[i]
        clamped = tuple(int(i) for i in np.nonzero(rate < 0)[0])
        rate = np.clip(rate, 0.0, None)
        meta.update(seed=str(noise_seed), rng=RNG_NAME)
    fpw = photon_flux(1.0, source.flux_wavelength, cfg.beam_area)
    return PowerSeries(powers, rate, err, dwell, sweep, Axis.POWER, fpw, clamped, meta)
