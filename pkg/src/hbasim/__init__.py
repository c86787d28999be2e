"""Hot-band absorption vs two-photon excited fluorescence: forward models and inversion."""
from .constants import CONSTANTS, GAUSSIAN_2P_PREFACTOR, GM, PhysicalConstants
from .inference import (
    FitReport,
    MechanismVerdict,
    Param,
    Verdict,
    check_boltzmann_slope,
    derive_sigma_c2pa,
    derive_sigma_hba,
    discriminate_mechanism,
    fit_boltzmann,
    fit_linear_quadratic,
    fit_loglog_slope,
)
from .photophysics import Fluorophore, fc_ratio, find_nu_max, hba_cross_section, sigma_max_from_epsilon
from .series import Axis, PowerSeries, SweepKind
from .signal_model import (
    BeamGeometry,
    Broadband,
    CollectionChain,
    ExperimentConfig,
    Monochromatic,
    beam_area,
    c2pef_signal,
    e2pa_signal_toy,
    gamma_overlap,
    hba_signal,
    photon_flux,
    simulate_power_series,
    total_signal,
)
from .spectra import (
    GaussianFit,
    Spectrum,
    SpectrumKind,
    fit_gaussian,
    integrate,
    mirror_about_center,
    normalize_peak,
    photon_energy,
    resample,
    wavelength_to_frequency,
)

__version__ = "0.1.0"
