"""Command-line front end.

Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.
Errors are printed to stderr as a single JSON line.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .constants import GM
from .inference import (
    FitReport,
    RegimeError,
    RegimeWarning,
    derive_sigma_c2pa,
    derive_sigma_hba,
    discriminate_mechanism,
    fit_boltzmann,
    fit_linear_quadratic,
    fit_loglog_slope,
)
from .photophysics import fc_ratio, find_nu_max
from .report import atomic_write_text, build_report, write_report
from .series import Axis, SeriesError, format_power_series_csv, read_power_series_csv
from .signal_model import RNG_NAME, CollectionChain, gamma_overlap, photon_flux, simulate_power_series
from .spectra import (
    FitError,
    OutOfDomainError,
    SpectrumError,
    SpectrumKind,
    fit_gaussian,
    format_spectrum_csv,
    mirror_about_center,
    photon_energy,
    read_spectrum_csv,
    wavelength_to_frequency,
)

OUTPUT_ENV = "HBASIM_OUTPUT_DIR"
DEFAULT_OUTPUT = "hbasim_out"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _output_dir(arg: str | None, configured: str | None = None) -> Path:
    return Path(arg or configured or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError as exc:
        raise UsageError(f"cannot parse number list {text!r}") from exc


def _curve_csv(header: tuple[str, str], x, y) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for a, b in zip(x, y):
        buf.write(f"{float(a)!r},{float(b)!r}\n")
    return buf.getvalue()


# -- simulate ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    doc = cfgmod.load_document(args.config)
    resolved = cfgmod.resolve_config(doc, Path(args.config).parent)
    sim = resolved["simulate"]
    if args.mechanism:
        sim["mechanism"] = args.mechanism
    if args.sweep:
        sim["sweep"] = args.sweep
    if args.powers:
        sim["powers_w"] = _float_list(args.powers)
    if args.seed is not None:
        resolved["run"]["seed"] = args.seed
    if args.no_noise:
        resolved["run"]["seed"] = None
    if not sim["powers_w"]:
        raise cfgmod.ConfigError("no powers given (simulate.powers_w or --powers)")
    run = cfgmod.build(resolved)

    series = simulate_power_series(
        run.experiment, sim["mechanism"], sim["sweep"], sim["powers_w"],
        dwell=float(resolved["run"]["dwell_s"]), background_rate=run.background,
        noise_seed=run.seed, source=run.source,
        sigma_hba=sim["sigma_hba_cm2"], sigma_e2pa=sim["sigma_e2pa_cm2"],
        transmission=float(sim["photon_transmission"]))

    out = _output_dir(args.out, resolved["run"]["output_dir"])
    atomic_write_text(out / "power_series.csv", format_power_series_csv(series))
    results = {"series_csv": "power_series.csv",
               "mechanism": sim["mechanism"], "sweep": sim["sweep"],
               "power_w": series.power.tolist(), "rate_cps": series.rate.tolist(),
               "rate_err_cps": series.rate_err.tolist(),
               "clamped": list(series.clamped),
               "flux_per_watt": series.flux_per_watt}
    if np.count_nonzero(series.rate > 0) >= 3:
        results["loglog_slope"] = fit_loglog_slope(series).to_dict()
    seed = run.seed
    write_report(out / "report.json",
                 build_report("simulate", resolved, results, seed,
                              RNG_NAME if seed is not None else None))
    return 0


# -- fit -----------------------------------------------------------------------

def _read_temperature_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    header = tuple(c.strip() for c in rows[0]) if rows else ()
    if header[:2] != ("temperature_k", "rate_cps"):
        raise SeriesError(f"{path}: expected header temperature_k,rate_cps")
    try:
        data = np.array([[float(v) for v in r[:2]] for r in rows[1:]])
    except ValueError as exc:
        raise SeriesError(f"{path}: malformed row ({exc})") from exc
    return data[:, 0], data[:, 1]


def cmd_fit(args) -> int:
    out = _output_dir(args.out)
    echo = {"series_csv": str(Path(args.series).resolve()), "model": args.model,
            "axis": args.axis, "weighted": args.weighted, "energy_nm": args.energy_nm}
    if args.model == "boltzmann":
        T, rate = _read_temperature_csv(args.series)
        energy = photon_energy(wavelength_to_frequency(args.energy_nm))
        rep = fit_boltzmann(T, rate, energy, fit_energy=args.free_energy)
        xs = np.linspace(T.min(), T.max(), 200)
        ys = rep["A"] * np.exp(-rep["E"] / (1.380649e-23 * xs)) + rep["C"]
        curve = _curve_csv(("temperature_k", "rate_cps"), xs, ys)
    else:
        series = read_power_series_csv(args.series)
        if args.axis:
            series = series.with_axis(args.axis)
        x = series.x
        xs = np.geomspace(x.min(), x.max(), 200)
        if args.model == "slope":
            rep = fit_loglog_slope(series, weighted=args.weighted)
            ys = 10 ** rep["intercept"] * xs ** rep["slope"]
        else:
            rep = fit_linear_quadratic(series, weighted=True if args.weighted else None)
            ys = rep["a"] * xs + rep["b"] * xs ** 2
        curve = _curve_csv((f"{series.axis.value}", "rate_cps"), xs, ys)
    if not rep.converged:
        raise FitError("fit did not converge")
    atomic_write_text(out / "fit_curve.csv", curve)
    write_report(out / "report.json",
                 build_report("fit", echo, {"fit": rep.to_dict(), "curve_csv": "fit_curve.csv"}))
    return 0


# -- derive ----------------------------------------------------------------------

def _budget(rel_fit: float, unc: dict, include: dict[str, float]) -> dict:
    """Quadrature sum of relative uncertainties; ``include`` maps key -> exponent."""
    terms = {"fit": rel_fit}
    for key, power in include.items():
        terms[key] = abs(power) * float(unc[key])
    total = math.sqrt(sum(v * v for v in terms.values()))
    return {"relative_terms": terms, "relative_total": total}


def cmd_derive(args) -> int:
    run = cfgmod.load_config(args.config)
    series = read_power_series_csv(args.series)
    unc = run.resolved["uncertainty"]
    out = _output_dir(args.out, run.resolved["run"]["output_dir"])
    results: dict = {"quantity": args.quantity}
    if args.quantity == "c2pa":
        src = run.source
        if not hasattr(src, "wavelength"):
            raise cfgmod.ConfigError("c2pa derivation needs a laser source")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RegimeWarning)
            rep = derive_sigma_c2pa(series.with_axis(Axis.POWER), run.experiment, src.wavelength,
                                    on_regime_failure=args.on_regime_failure)
        sigma_gm = rep["sigma_c2pa_gm"]
        rel_fit = rep.stderr("sigma_c2pa_gm") / sigma_gm if sigma_gm else 0.0
        budget = _budget(rel_fit, unc, {"kappa": 1, "gamma": 1, "eta": 1, "concentration": 1,
                                        "beam_area": 1, "power": 2})
        results.update(fit=rep.to_dict(), sigma_c2pa_gm=sigma_gm,
                       sigma_c2pa_gm_uncertainty=sigma_gm * budget["relative_total"],
                       uncertainty_budget=budget,
                       warnings=[str(w.message) for w in caught])
    else:
        fpw = series.flux_per_watt
        if not fpw:
            fpw = photon_flux(1.0, run.source.flux_wavelength, run.experiment.beam_area)
        flux_series = series.with_axis(Axis.FLUX, fpw)
        rep = fit_linear_quadratic(flux_series)
        a, b = rep["a"], rep["b"]
        sigma_c2pa = run.experiment.fluorophore.sigma_c2pa
        if sigma_c2pa <= 0:
            raise cfgmod.ConfigError("hba derivation needs fluorophore.sigma_c2pa_gm > 0")
        sigma_hba = derive_sigma_hba(a, b, sigma_c2pa)
        cov = rep.covariance
        rel_ab = 0.0
        if a > 0:
            rel_ab = math.sqrt(max(cov[0, 0] / a ** 2 + cov[1, 1] / b ** 2
                                   - 2 * cov[0, 1] / (a * b), 0.0))
        budget = _budget(rel_ab, unc, {"sigma_c2pa": 1})
        results.update(fit=rep.to_dict(), sigma_hba_cm2=sigma_hba,
                       sigma_hba_cm2_uncertainty=sigma_hba * budget["relative_total"],
                       sigma_c2pa_gm=sigma_c2pa / GM, uncertainty_budget=budget)
    echo = dict(run.resolved)
    write_report(out / "report.json", build_report("derive", echo, results))
    return 0


# -- discriminate ----------------------------------------------------------------

def cmd_discriminate(args) -> int:
    pump = read_power_series_csv(args.pump)
    atten = read_power_series_csv(args.attenuation)
    verdict = discriminate_mechanism(pump, atten, threshold=args.threshold)
    out = _output_dir(args.out)
    echo = {"pump_csv": str(Path(args.pump).resolve()),
            "attenuation_csv": str(Path(args.attenuation).resolve()),
            "threshold": args.threshold}
    write_report(out / "report.json",
                 build_report("discriminate", echo, {"verdict": verdict.to_dict()}))
    return 0


# -- spectrum --------------------------------------------------------------------

def cmd_spectrum(args) -> int:
    out = _output_dir(args.out)
    echo = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
            if k not in ("func",)}
    results: dict = {"op": args.op}
    if args.op == "mirror":
        s = read_spectrum_csv(args.input, args.kind)
        m = mirror_about_center(s, args.center, args.blue_cutoff)
        atomic_write_text(out / "spectrum.csv", format_spectrum_csv(m))
        results.update(spectrum_csv="spectrum.csv", span_nm=list(m.span))
    elif args.op == "gaussfit":
        g = fit_gaussian(read_spectrum_csv(args.input, args.kind))
        results.update(center_nm=g.center, fwhm_nm=g.fwhm, amplitude=g.amplitude,
                       residual_rms=g.residual_rms)
        xs = np.linspace(g.center - 3 * g.fwhm, g.center + 3 * g.fwhm, 400)
        xs = xs[xs > 0]
        atomic_write_text(out / "fit_curve.csv", _curve_csv(("wavelength_nm", "value"), xs, g(xs)))
    elif args.op == "gamma":
        em = read_spectrum_csv(args.emission, SpectrumKind.EMISSION)
        filters = tuple(read_spectrum_csv(p, SpectrumKind.TRANSMISSION) for p in args.filter or [])
        qe = read_spectrum_csv(args.qe, SpectrumKind.QUANTUM_EFFICIENCY) if args.qe else None
        results["gamma"] = gamma_overlap(em, CollectionChain(filters=filters, pmt_qe=qe))
    elif args.op == "numax":
        nu = find_nu_max(read_spectrum_csv(args.absorption, SpectrumKind.ABSORPTION),
                         read_spectrum_csv(args.emission, SpectrumKind.EMISSION))
        results.update(nu_max_hz=nu, nu_max_nm=299792458.0 / nu * 1e9)
    elif args.op == "fc":
        ab = read_spectrum_csv(args.absorption, SpectrumKind.ABSORPTION)
        nu_max = wavelength_to_frequency(args.nu_max_nm)
        lams = np.asarray(args.lambda_nm, dtype=float)
        fc = np.atleast_1d(fc_ratio(wavelength_to_frequency(lams), ab, nu_max))
        results.update(lambda_nm=lams.tolist(), fc=fc.tolist())
        atomic_write_text(out / "fc.csv", _curve_csv(("wavelength_nm", "fc"), lams, fc))
    write_report(out / "report.json", build_report("spectrum", echo, results))
    return 0


# -- entry point -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hbasim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="synthesize a power series from a config")
    s.add_argument("config")
    s.add_argument("--mechanism", choices=["HBA", "C2PA", "mixed", "E2PA"])
    s.add_argument("--sweep", choices=["pump_power", "post_attenuation"])
    s.add_argument("--powers", help="comma-separated powers at the sample, W")
    s.add_argument("--seed", type=int)
    s.add_argument("--no-noise", action="store_true", help="ignore any configured seed")
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fit", help="fit a power or temperature series")
    f.add_argument("series")
    f.add_argument("--model", choices=["slope", "linquad", "boltzmann"], default="slope")
    f.add_argument("--axis", choices=["power", "flux"])
    f.add_argument("--weighted", action="store_true")
    f.add_argument("--energy-nm", type=float, default=1064.0,
                   help="photon wavelength fixing E for the Boltzmann model")
    f.add_argument("--free-energy", action="store_true")
    f.add_argument("--out")
    f.set_defaults(func=cmd_fit)

    d = sub.add_parser("derive", help="derive a cross section from a series")
    d.add_argument("series")
    d.add_argument("--config", required=True)
    d.add_argument("--quantity", choices=["c2pa", "hba"], default="c2pa")
    d.add_argument("--on-regime-failure", choices=["warn", "abort"], default="warn")
    d.add_argument("--out")
    d.set_defaults(func=cmd_derive)

    m = sub.add_parser("discriminate", help="pump-vs-attenuation mechanism test")
    m.add_argument("pump")
    m.add_argument("attenuation")
    m.add_argument("--threshold", type=float, default=0.15)
    m.add_argument("--out")
    m.set_defaults(func=cmd_discriminate)

    sp = sub.add_parser("spectrum", help="spectrum utilities")
    ops = sp.add_subparsers(dest="op", required=True, parser_class=_Parser)
    o = ops.add_parser("mirror")
    o.add_argument("--input", required=True)
    o.add_argument("--center", type=float, required=True)
    o.add_argument("--blue-cutoff", type=float)
    o.add_argument("--kind", default="spectral_power_density", choices=[k.value for k in SpectrumKind])
    o = ops.add_parser("gaussfit")
    o.add_argument("--input", required=True)
    o.add_argument("--kind", default="spectral_power_density", choices=[k.value for k in SpectrumKind])
    o = ops.add_parser("gamma")
    o.add_argument("--emission", required=True)
    o.add_argument("--filter", action="append")
    o.add_argument("--qe")
    o = ops.add_parser("numax")
    o.add_argument("--absorption", required=True)
    o.add_argument("--emission", required=True)
    o = ops.add_parser("fc")
    o.add_argument("--absorption", required=True)
    o.add_argument("--nu-max-nm", type=float, required=True)
    o.add_argument("--lambda-nm", type=float, nargs="+", required=True)
    for o in ops.choices.values():
        o.add_argument("--out")
    sp.set_defaults(func=cmd_spectrum)
    return p


_NUMERIC = (FitError, RegimeError, OutOfDomainError, np.linalg.LinAlgError,
            FloatingPointError, ArithmeticError)
_INPUT = (UsageError, cfgmod.ConfigError, SeriesError, SpectrumError, OSError,
          ValueError, TypeError)


def _fail(exc: Exception, code: int) -> int:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "exit_code": code,
                                 "message": str(exc)}) + "\n")
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except _NUMERIC as exc:
        return _fail(exc, 2)
    except _INPUT as exc:
        return _fail(exc, 1)


if __name__ == "__main__":
    sys.exit(main())
