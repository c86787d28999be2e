"""Run configuration: a nested YAML (or JSON) document.

Unknown sections or keys are errors. ``resolve_config`` materializes every
default and turns relative CSV paths into absolute ones, so the resolved
dictionary can be written into a report and fed back in unchanged.
"""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .constants import DEFAULT_TEMPERATURE, GM
from .photophysics import Fluorophore, find_nu_max
from .signal_model import (
    DEFAULT_BACKGROUND,
    DEFAULT_EFFECTIVE_WAVELENGTH,
    DEFAULT_KAPPA,
    DEFAULT_LINEWIDTH,
    DEFAULT_PHOTON_TRANSMISSION,
    BeamGeometry,
    Broadband,
    CollectionChain,
    ExperimentConfig,
    Monochromatic,
)
from .spectra import SpectrumKind, mirror_about_center, read_spectrum_csv, wavelength_to_frequency
from .synthetic import gaussian_spectrum


class ConfigError(ValueError):
    pass


REQUIRED = object()

SCHEMA: dict[str, dict] = {
    "fluorophore": {
        "name": REQUIRED,
        "eta": REQUIRED,
        "epsilon_max": None,
        "nu_max_nm": None,          # number, "auto", or null
        "sigma_c2pa_gm": 0.0,
        "absorption_csv": None,
        "emission_csv": None,
    },
    "experiment": {
        "concentration_mM": REQUIRED,
        "path_length_cm": 1.0,
        "beam_fwhm_x_um": REQUIRED,
        "beam_fwhm_y_um": REQUIRED,
        "rayleigh_range_um": None,
        "kappa": DEFAULT_KAPPA,
        "gamma": None,              # overrides the spectral overlap when set
        "temperature_K": DEFAULT_TEMPERATURE,
        "background_cps": DEFAULT_BACKGROUND,
    },
    "source": {
        "type": "laser",            # laser | spdc
        "lambda_nm": 1060.0,
        "linewidth_fwhm_nm": DEFAULT_LINEWIDTH,
        "spectrum_csv": None,
        "center_nm": 1077.4,        # synthetic Gaussian SPDC when no spectrum_csv
        "fwhm_nm": 128.9,
        "mirror_center_nm": None,   # reflect the red side of spectrum_csv about this
        "power_w": 1e-3,
        "blue_cutoff_nm": None,
        "effective_wavelength_nm": DEFAULT_EFFECTIVE_WAVELENGTH,
    },
    "collection": {
        "filter_csv": [],
        "pmt_qe_csv": None,
    },
    "run": {
        "seed": None,
        "dwell_s": 100.0,
        "output_dir": None,
    },
    "simulate": {
        "mechanism": "C2PA",
        "sweep": "pump_power",
        "powers_w": None,
        "sigma_hba_cm2": None,
        "sigma_e2pa_cm2": None,
        "photon_transmission": DEFAULT_PHOTON_TRANSMISSION,
    },
    "uncertainty": {                # relative 1-sigma, for derived cross sections
        "kappa": 0.0,
        "gamma": 0.0,
        "eta": 0.0,
        "concentration": 0.0,
        "beam_area": 0.0,
        "power": 0.0,
        "sigma_c2pa": 0.0,
    },
}

_PATH_KEYS = {("fluorophore", "absorption_csv"), ("fluorophore", "emission_csv"),
              ("source", "spectrum_csv"), ("collection", "pmt_qe_csv")}


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot (``1e-37``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                   |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                   |[0-9][0-9_]*[eE][-+]?[0-9]+
                   |\.(?:inf|Inf|INF)|[-+]\.(?:inf|Inf|INF)
                   |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))

_NUMERIC_KEYS = {
    "fluorophore": ("eta", "epsilon_max", "sigma_c2pa_gm"),
    "experiment": ("concentration_mM", "path_length_cm", "beam_fwhm_x_um", "beam_fwhm_y_um",
                   "rayleigh_range_um", "kappa", "gamma", "temperature_K", "background_cps"),
    "source": ("lambda_nm", "linewidth_fwhm_nm", "center_nm", "fwhm_nm", "mirror_center_nm",
               "power_w", "blue_cutoff_nm", "effective_wavelength_nm"),
    "run": ("dwell_s",),
    "simulate": ("sigma_hba_cm2", "sigma_e2pa_cm2", "photon_transmission"),
    "uncertainty": tuple(SCHEMA["uncertainty"]),
}


def load_document(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
        doc = json.loads(text) if path.suffix.lower() == ".json" else yaml.load(text, _Loader)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    # a report can be used directly as a config
    if "config_echo" in doc and "schema_version" in doc:
        doc = doc["config_echo"]
        if not isinstance(doc, dict):
            raise ConfigError(f"{path}: config_echo is not a mapping")
    return doc


def resolve_config(doc: dict, base_dir=".") -> dict:
    base = Path(base_dir)
    unknown = set(doc) - set(SCHEMA)
    if unknown:
        raise ConfigError(f"unknown config section(s): {sorted(unknown)}")
    out = {}
    for section, spec in SCHEMA.items():
        given = doc.get(section) or {}
        if not isinstance(given, dict):
            raise ConfigError(f"section [{section}] must be a mapping")
        bad = set(given) - set(spec)
        if bad:
            raise ConfigError(f"unknown key(s) in [{section}]: {sorted(bad)}")
        resolved = {}
        for key, default in spec.items():
            if key in given:
                value = given[key]
            elif default is REQUIRED:
                if section in ("fluorophore", "experiment"):
                    raise ConfigError(f"missing required key {section}.{key}")
                value = None
            else:
                value = copy.deepcopy(default)
            resolved[key] = value
        out[section] = resolved
    for section, key in _PATH_KEYS:
        if out[section][key] is not None:
            out[section][key] = str((base / out[section][key]).resolve())
    out["collection"]["filter_csv"] = [str((base / p).resolve())
                                       for p in out["collection"]["filter_csv"] or []]
    _check_values(out)
    return out


def _check_values(cfg: dict) -> None:
    for section, keys in _NUMERIC_KEYS.items():
        for key in keys:
            v = cfg[section][key]
            if v is not None and (isinstance(v, bool) or not isinstance(v, (int, float))):
                raise ConfigError(f"{section}.{key} must be a number, got {v!r}")
    seed = cfg["run"]["seed"]
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int)):
        raise ConfigError("run.seed must be an integer or null")
    src = cfg["source"]
    if src["type"] not in ("laser", "spdc"):
        raise ConfigError("source.type must be 'laser' or 'spdc'")
    nu = cfg["fluorophore"]["nu_max_nm"]
    if nu is not None and nu != "auto" and not isinstance(nu, (int, float)):
        raise ConfigError("fluorophore.nu_max_nm must be a number, 'auto' or null")
    for section, key in _PATH_KEYS:
        p = cfg[section][key]
        if p is not None and not Path(p).is_file():
            raise ConfigError(f"{section}.{key}: file not found: {p}")
    for p in cfg["collection"]["filter_csv"]:
        if not Path(p).is_file():
            raise ConfigError(f"collection.filter_csv: file not found: {p}")
    powers = cfg["simulate"]["powers_w"]
    if powers is not None and not (isinstance(powers, list)
                                   and all(isinstance(v, (int, float)) for v in powers)):
        raise ConfigError("simulate.powers_w must be a list of numbers")


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Resolved configuration plus the objects built from it."""

    resolved: dict
    experiment: ExperimentConfig
    source: Monochromatic | Broadband

    @property
    def background(self) -> float:
        return float(self.resolved["experiment"]["background_cps"])

    @property
    def seed(self):
        return self.resolved["run"]["seed"]


def _fluorophore(sec: dict) -> Fluorophore:
    absorption = (read_spectrum_csv(sec["absorption_csv"], SpectrumKind.ABSORPTION)
                  if sec["absorption_csv"] else None)
    emission = (read_spectrum_csv(sec["emission_csv"], SpectrumKind.EMISSION)
                if sec["emission_csv"] else None)
    nu = sec["nu_max_nm"]
    if nu == "auto":
        if absorption is None or emission is None:
            raise ConfigError("nu_max_nm 'auto' needs absorption_csv and emission_csv")
        nu_max = find_nu_max(absorption, emission)
    else:
        nu_max = wavelength_to_frequency(float(nu)) if nu is not None else None
    return Fluorophore(
        name=str(sec["name"]), eta=float(sec["eta"]),
        sigma_c2pa=float(sec["sigma_c2pa_gm"]) * GM,
        epsilon_max=float(sec["epsilon_max"]) if sec["epsilon_max"] is not None else None,
        nu_max=nu_max, absorption=absorption, emission=emission)


def build_source(sec: dict, power: float | None = None):
    power = float(sec["power_w"] if power is None else power)
    if sec["type"] == "laser":
        return Monochromatic(float(sec["lambda_nm"]), power, float(sec["linewidth_fwhm_nm"]))
    if sec["spectrum_csv"]:
        shape = read_spectrum_csv(sec["spectrum_csv"], SpectrumKind.SPECTRAL_POWER_DENSITY)
        if sec["mirror_center_nm"] is not None:
            shape = mirror_about_center(shape, float(sec["mirror_center_nm"]))
    else:
        c, w = float(sec["center_nm"]), float(sec["fwhm_nm"])
        grid = np.linspace(max(c - 6 * w, 1.0), c + 6 * w, 4001)
        shape = gaussian_spectrum(c, w, grid, SpectrumKind.SPECTRAL_POWER_DENSITY)
    cutoff = sec["blue_cutoff_nm"]
    return Broadband.from_shape(shape, power, float(cutoff) if cutoff is not None else None,
                                float(sec["effective_wavelength_nm"]))


def build(resolved: dict) -> RunConfig:
    try:
        exp = resolved["experiment"]
        col = resolved["collection"]
        filters = tuple(read_spectrum_csv(p, SpectrumKind.TRANSMISSION) for p in col["filter_csv"])
        qe = (read_spectrum_csv(col["pmt_qe_csv"], SpectrumKind.QUANTUM_EFFICIENCY)
              if col["pmt_qe_csv"] else None)
        chain = CollectionChain(kappa=float(exp["kappa"]), filters=filters, pmt_qe=qe,
                                gamma=float(exp["gamma"]) if exp["gamma"] is not None else None)
        beam = BeamGeometry(float(exp["beam_fwhm_x_um"]), float(exp["beam_fwhm_y_um"]),
                            exp["rayleigh_range_um"])
        experiment = ExperimentConfig(
            _fluorophore(resolved["fluorophore"]),
            concentration=float(exp["concentration_mM"]) * 1e-3,
            path_length=float(exp["path_length_cm"]),
            beam=beam, collection=chain, temperature=float(exp["temperature_K"]))
        source = build_source(resolved["source"])
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return RunConfig(resolved, experiment, source)


def load_config(path) -> RunConfig:
    path = Path(path)
    return build(resolve_config(load_document(path), path.parent))
