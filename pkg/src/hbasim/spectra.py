"""Sampled spectra on a wavelength grid.

Spectra are stored against wavelength in nm. Linear interpolation and
trapezoidal quadrature are used throughout, so every operation here is exact
for the piecewise-linear representation. Queries outside the sampled range
raise instead of returning zero.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit

from .constants import C, H

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


class SpectrumKind(str, Enum):
    TRANSMISSION = "transmission"
    EMISSION = "emission"
    ABSORPTION = "absorption"
    QUANTUM_EFFICIENCY = "quantum_efficiency"
    SPECTRAL_POWER_DENSITY = "spectral_power_density"

    @property
    def unit(self) -> str:
        return "W/nm" if self is SpectrumKind.SPECTRAL_POWER_DENSITY else "1"


_BOUNDED_KINDS = (SpectrumKind.TRANSMISSION, SpectrumKind.QUANTUM_EFFICIENCY)


class SpectrumError(ValueError):
    pass


class OutOfDomainError(SpectrumError):
    """Raised when a spectrum is queried outside its sampled range."""


class FitError(RuntimeError):
    pass


def _readonly(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    grid: np.ndarray
    values: np.ndarray
    kind: SpectrumKind = SpectrumKind.EMISSION

    def __post_init__(self):
        grid = _readonly(self.grid)
        values = _readonly(self.values)
        kind = SpectrumKind(self.kind)
        if grid.ndim != 1 or grid.shape != values.shape:
            raise SpectrumError("grid and values must be 1-D arrays of equal length")
        if grid.size < 2:
            raise SpectrumError("a spectrum needs at least 2 samples")
        if not (np.all(np.isfinite(grid)) and np.all(grid > 0)):
            raise SpectrumError("wavelengths must be finite and positive")
        if np.any(np.diff(grid) <= 0):
            raise SpectrumError("wavelength grid must be strictly ascending")
        if not np.all(np.isfinite(values)):
            raise SpectrumError("spectrum values must be finite")
        if np.any(values < 0):
            raise SpectrumError(f"{kind.value} values must be non-negative")
        if kind in _BOUNDED_KINDS and np.any(values > 1):
            raise SpectrumError(f"{kind.value} values must lie in [0, 1]")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "kind", kind)

    @property
    def unit(self) -> str:
        return self.kind.unit

    @property
    def span(self) -> tuple[float, float]:
        return float(self.grid[0]), float(self.grid[-1])

    def __call__(self, wavelength):
        """Linearly interpolated value(s) at ``wavelength`` (nm)."""
        lam = np.asarray(wavelength, dtype=float)
        lo, hi = self.span
        if np.any(~np.isfinite(lam)) or np.any(lam < lo) or np.any(lam > hi):
            raise OutOfDomainError(
                f"wavelength outside sampled range [{lo:g}, {hi:g}] nm")
        out = np.interp(lam, self.grid, self.values)
        return float(out) if out.ndim == 0 else out

    def scaled(self, factor: float) -> "Spectrum":
        return Spectrum(self.grid, self.values * factor, self.kind)


def wavelength_to_frequency(wavelength_nm):
    """nu = c / lambda, with lambda in nm and nu in Hz."""
    lam = np.asarray(wavelength_nm, dtype=float)
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0):
        raise ValueError("wavelength must be finite and positive")
    nu = C / (lam * 1e-9)
    return float(nu) if nu.ndim == 0 else nu


def frequency_to_wavelength(nu_hz):
    nu = np.asarray(nu_hz, dtype=float)
    if np.any(~np.isfinite(nu)) or np.any(nu <= 0):
        raise ValueError("frequency must be finite and positive")
    lam = C / nu * 1e9
    return float(lam) if lam.ndim == 0 else lam


def photon_energy(nu_hz):
    """Photon energy h*nu in J."""
    nu = np.asarray(nu_hz, dtype=float)
    if np.any(~np.isfinite(nu)) or np.any(nu <= 0):
        raise ValueError("frequency must be finite and positive")
    e = H * nu
    return float(e) if e.ndim == 0 else e


def resample(s: Spectrum, grid) -> Spectrum:
    """Linear interpolation of ``s`` onto ``grid``; extrapolation is an error."""
    grid = np.asarray(grid, dtype=float)
    return Spectrum(grid, s(grid), s.kind)


def integrate(s: Spectrum) -> float:
    """Trapezoidal integral over the full grid, in value-units x nm."""
    return float(np.trapezoid(s.values, s.grid))


def normalize_peak(s: Spectrum) -> Spectrum:
    peak = float(np.max(s.values))
    if peak <= 0:
        raise SpectrumError("cannot peak-normalize an all-zero spectrum")
    return Spectrum(s.grid, s.values / peak, s.kind)


@dataclass(frozen=True)
class GaussianFit:
    center: float       # nm
    fwhm: float         # nm
    amplitude: float
    residual_rms: float = 0.0

    def __post_init__(self):
        if not (self.fwhm > 0 and self.amplitude > 0):
            raise FitError("Gaussian fit produced non-positive width or amplitude")

    @property
    def sigma(self) -> float:
        return self.fwhm / FWHM_PER_SIGMA

    def __call__(self, wavelength):
        lam = np.asarray(wavelength, dtype=float)
        return self.amplitude * np.exp(-0.5 * ((lam - self.center) / self.sigma) ** 2)


def _gauss(x, amp, center, sigma):
    return amp * np.exp(-0.5 * ((x - center) / sigma) ** 2)


def fit_gaussian(s: Spectrum, max_iter: int = 2000) -> GaussianFit:
    """Least-squares single Gaussian (no offset) fitted to ``s``."""
    x, y = s.grid, s.values
    i_peak = int(np.argmax(y))
    amp0 = float(y[i_peak])
    if amp0 <= 0:
        raise FitError("spectrum has no positive peak")
    # width guess from the half-maximum crossings
    above = np.nonzero(y >= 0.5 * amp0)[0]
    width0 = max(float(x[above[-1]] - x[above[0]]), float(np.min(np.diff(x))))
    p0 = (amp0, float(x[i_peak]), width0 / FWHM_PER_SIGMA)
    scale = amp0
    try:
        with warnings.catch_warnings():
            # exact data leave the covariance undefined; not a failure here
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _ = curve_fit(_gauss, x, y / scale, p0=(1.0, p0[1], p0[2]),
                                maxfev=max_iter, xtol=1e-14, ftol=1e-14)
    except RuntimeError as exc:
        raise FitError(f"Gaussian fit did not converge: {exc}") from exc
    amp, center, sigma = popt
    amp *= scale
    sigma = abs(sigma)
    resid = y - _gauss(x, amp, center, sigma)
    return GaussianFit(center=float(center), fwhm=float(sigma * FWHM_PER_SIGMA),
                       amplitude=float(amp),
                       residual_rms=float(np.sqrt(np.mean(resid ** 2))))


def mirror_about_center(s: Spectrum, center: float,
                        blue_cutoff: float | None = None) -> Spectrum:
    """Replace the blue side of ``s`` by the reflection of its red side.

    The output keeps every sample with wavelength >= ``center`` and adds, for
    each of them, a sample at ``2*center - lambda`` carrying the same value.
    Samples originally bluer than ``center`` are discarded. ``blue_cutoff``
    truncates the result (a long-pass filter edge); the cutoff itself becomes
    the first grid point.
    """
    lo, hi = s.span
    if not (lo <= center <= hi):
        raise OutOfDomainError(f"center {center:g} nm outside [{lo:g}, {hi:g}] nm")
    red = s.grid > center
    if not np.any(red):
        raise SpectrumError("no samples on the red side of the center")
    red_grid = s.grid[red]
    red_vals = s.values[red]
    blue_grid = 2.0 * center - red_grid[::-1]
    blue_vals = red_vals[::-1]
    keep = blue_grid > 0
    grid = np.concatenate([blue_grid[keep], [center], red_grid])
    values = np.concatenate([blue_vals[keep], [s(center)], red_vals])
    out = Spectrum(grid, values, s.kind)
    if blue_cutoff is not None:
        out = truncate_blue(out, blue_cutoff)
    return out


def truncate_blue(s: Spectrum, cutoff: float) -> Spectrum:
    """Drop samples bluer than ``cutoff``; the cut is placed exactly at ``cutoff``."""
    lo, hi = s.span
    if cutoff <= lo:
        return s
    if cutoff >= hi:
        raise SpectrumError(f"cutoff {cutoff:g} nm removes the whole spectrum")
    keep = s.grid > cutoff
    grid = np.concatenate([[cutoff], s.grid[keep]])
    values = np.concatenate([[s(cutoff)], s.values[keep]])
    return Spectrum(grid, values, s.kind)


def common_window(*spectra: Spectrum) -> tuple[float, float]:
    lo = max(sp.span[0] for sp in spectra)
    hi = min(sp.span[1] for sp in spectra)
    if not lo < hi:
        raise SpectrumError("spectra have no common wavelength window")
    return lo, hi


def union_grid(*spectra: Spectrum, window: tuple[float, float] | None = None) -> np.ndarray:
    """Sorted union of all sample wavelengths, clipped to ``window`` (inclusive)."""
    lo, hi = window if window is not None else common_window(*spectra)
    pts = np.concatenate([sp.grid for sp in spectra] + [np.array([lo, hi])])
    pts = pts[(pts >= lo) & (pts <= hi)]
    return np.unique(pts)


# -- CSV -------------------------------------------------------------------

SPECTRUM_HEADER = ("wavelength_nm", "value")


def read_spectrum_csv(path, kind) -> Spectrum:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
    if not rows or tuple(c.strip() for c in rows[0]) != SPECTRUM_HEADER:
        raise SpectrumError(f"{path}: expected header {','.join(SPECTRUM_HEADER)}")
    try:
        data = np.array([[float(a), float(b)] for a, b in rows[1:]], dtype=float)
    except ValueError as exc:
        raise SpectrumError(f"{path}: malformed row ({exc})") from exc
    if data.size == 0:
        raise SpectrumError(f"{path}: no samples")
    return Spectrum(data[:, 0], data[:, 1], kind)


def format_spectrum_csv(s: Spectrum) -> str:
    lines = [",".join(SPECTRUM_HEADER)]
    lines += [f"{float(x)!r},{float(y)!r}" for x, y in zip(s.grid, s.values)]
    return "\n".join(lines) + "\n"
