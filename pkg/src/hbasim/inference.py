"""Inverse problems on measured or simulated power series."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import curve_fit, nnls

from .constants import C_CM, GM, H, K_B
from .series import PowerSeries, SeriesError, SweepKind
from .signal_model import ExperimentConfig, c2pef_coefficient
from .spectra import FitError

DEFAULT_THRESHOLD = 0.15
QUADRATIC_REGIME = (1.8, 2.2)


class RegimeWarning(UserWarning):
    pass


class RegimeError(FitError):
    pass


class Param(NamedTuple):
    value: float
    stderr: float


@dataclass
class FitReport:
    model: str
    params: dict[str, Param]
    residual_rms: float
    dof: int
    converged: bool = True
    covariance: np.ndarray | None = None
    notes: dict = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.params[name].value

    def stderr(self, name: str) -> float:
        return self.params[name].stderr

    def to_dict(self) -> dict:
        out = {
            "model": self.model,
            "params": {k: {"value": float(p.value), "stderr": float(p.stderr)}
                       for k, p in self.params.items()},
            "residual_rms": float(self.residual_rms),
            "dof": int(self.dof),
            "converged": bool(self.converged),
            "notes": _jsonable(self.notes),
        }
        if self.covariance is not None:
            out["covariance"] = np.asarray(self.covariance, dtype=float).tolist()
        return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, Enum):
        return obj.value
    return obj


def _linear_fit(x, y, w=None):
    """Straight line y = intercept + slope*x; returns params, covariance, residuals, dof.

    With weights the covariance is absolute (1/sigma^2 weights); without, it
    is scaled by the residual variance.
    """
    x0 = float(np.mean(x))
    A = np.column_stack([np.ones_like(x), x - x0])
    sw = np.sqrt(w) if w is not None else np.ones_like(x)
    coef, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
    resid = y - A @ coef
    dof = len(x) - 2
    cov = np.linalg.inv((A * (sw ** 2)[:, None]).T @ A)
    if w is None:
        cov = cov * (float(resid @ resid) / dof if dof > 0 else 0.0)
    # shift intercept back to x = 0
    J = np.array([[1.0, -x0], [0.0, 1.0]])
    coef = J @ coef
    cov = J @ cov @ J.T
    return coef, cov, resid, dof


def fit_loglog_slope(s: PowerSeries, weighted: bool = False) -> FitReport:
    """Power-law exponent from least squares of log10(rate) on log10(x).

    Points with zero rate are excluded and counted in ``notes``.
    """
    x, rate = s.x, s.rate
    use = rate > 0
    n_excluded = int(np.count_nonzero(~use))
    if np.count_nonzero(use) < 3:
        raise FitError(f"only {np.count_nonzero(use)} points with positive rate; need 3")
    lx, ly = np.log10(x[use]), np.log10(rate[use])
    w = None
    if weighted:
        err = s.rate_err[use]
        if np.any(err <= 0):
            raise FitError("weighted slope fit needs positive rate uncertainties")
        w = (rate[use] * math.log(10) / err) ** 2
    coef, cov, resid, dof = _linear_fit(lx, ly, w)
    return FitReport(
        model="loglog_slope",
        params={"slope": Param(coef[1], math.sqrt(max(cov[1, 1], 0.0))),
                "intercept": Param(coef[0], math.sqrt(max(cov[0, 0], 0.0)))},
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        dof=dof,
        covariance=cov,
        notes={"excluded_zero_rate": n_excluded, "weighted": weighted,
               "axis": s.axis.value},
    )


def fit_linear_quadratic(s: PowerSeries, weighted: bool | None = None) -> FitReport:
    """Non-negative least squares for rate = a*x + b*x**2 on the series axis.

    On the flux axis a = N K sigma_HBA and b = N K sigma_C2PA / 2. Weights
    1/rate_err**2 are used when ``weighted`` is true, or by default whenever
    every point carries a positive uncertainty.
    """
    x, y = s.x, s.rate
    if len(x) < 3:
        raise FitError("need at least 3 points")
    if np.ptp(x) == 0:
        raise FitError("degenerate design: all abscissae equal")
    err = s.rate_err
    if weighted is None:
        weighted = bool(np.all(err > 0))
    if weighted and np.any(err <= 0):
        raise FitError("weighted fit needs positive rate uncertainties")
    sw = 1.0 / err if weighted else np.ones_like(y)
    scale = float(np.max(np.abs(x)))
    u = x / scale
    A = np.column_stack([u, u ** 2])
    Aw = A * sw[:, None]
    if np.linalg.matrix_rank(Aw) < 2:
        raise FitError("degenerate design matrix")
    coef_u, _ = nnls(Aw, y * sw)
    # a term contributing below rounding level is treated as an active constraint
    tol = len(y) * np.finfo(float).eps * float(np.max(np.abs(y * sw)))
    for j in (0, 1):
        if 0 < coef_u[j] * np.max(np.abs(Aw[:, j])) <= tol:
            k = 1 - j
            coef_u = np.zeros(2)
            coef_u[k] = max(float(Aw[:, k] @ (y * sw)) / float(Aw[:, k] @ Aw[:, k]), 0.0)
            break
    resid = y - A @ coef_u
    active = [name for name, c in zip(("a", "b"), coef_u) if c == 0.0]
    dof = len(x) - (2 - len(active))
    cov_u = np.linalg.inv(Aw.T @ Aw)
    if not weighted:
        cov_u = cov_u * (float(resid @ resid) / dof if dof > 0 else 0.0)
    S = np.diag([1.0 / scale, 1.0 / scale ** 2])
    coef = S @ coef_u
    cov = S @ cov_u @ S
    return FitReport(
        model="linear_quadratic",
        params={"a": Param(coef[0], math.sqrt(cov[0, 0])),
                "b": Param(coef[1], math.sqrt(cov[1, 1]))},
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        dof=dof,
        covariance=cov,
        notes={"active_constraints": active, "weighted": weighted, "axis": s.axis.value},
    )


def derive_sigma_c2pa(s: PowerSeries, cfg: ExperimentConfig, wavelength: float = 1060.0,
                      on_regime_failure: str = "warn") -> FitReport:
    """Two-photon cross section by inverting the Gaussian-beam C2PEF model.

    The rates are fitted to beta * P**2 (powers in W at the sample) and
    beta is divided by the model coefficient. Per-point values are kept in
    ``notes`` for inspection.
    """
    if on_regime_failure not in ("warn", "abort"):
        raise ValueError("on_regime_failure must be 'warn' or 'abort'")
    slope = fit_loglog_slope(s)
    lo, hi = QUADRATIC_REGIME
    in_regime = bool(lo <= slope["slope"] <= hi)
    if not in_regime:
        msg = f"log-log slope {slope['slope']:.3f} outside quadratic regime [{lo}, {hi}]"
        if on_regime_failure == "abort":
            raise RegimeError(msg)
        warnings.warn(msg, RegimeWarning, stacklevel=2)

    p, f = s.power, s.rate
    p2 = p ** 2
    beta = float(f @ p2 / (p2 @ p2))
    resid = f - beta * p2
    dof = len(p) - 1
    var_beta = float(resid @ resid) / dof / float(p2 @ p2) if dof > 0 else 0.0
    coeff = c2pef_coefficient(cfg, wavelength)
    sigma = beta / coeff
    sigma_err = math.sqrt(var_beta) / coeff
    per_point = f / (coeff * p2) / GM
    return FitReport(
        model="sigma_c2pa",
        params={"sigma_c2pa_gm": Param(sigma / GM, sigma_err / GM),
                "sigma_c2pa_cm4s": Param(sigma, sigma_err),
                "quadratic_coefficient": Param(beta, math.sqrt(var_beta))},
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        dof=dof,
        notes={"loglog_slope": slope["slope"], "loglog_slope_stderr": slope.stderr("slope"),
               "in_quadratic_regime": in_regime,
               "per_point_gm": per_point.tolist(),
               "per_point_mean_gm": float(np.mean(per_point)),
               "per_point_std_gm": float(np.std(per_point, ddof=1))},
    )


def derive_sigma_hba(a: float, b: float, sigma_c2pa: float) -> float:
    """HBA cross section (cm^2) from the linear/quadratic coefficient ratio."""
    if b <= 0:
        raise ValueError("quadratic coefficient must be positive")
    if a < 0 or sigma_c2pa <= 0:
        raise ValueError("need a >= 0 and sigma_c2pa > 0")
    return a / b * sigma_c2pa / 2.0


def _boltzmann(T, A, C, E):
    return A * np.exp(-E / (K_B * T)) + C


def fit_boltzmann(temps: Sequence[float], rates: Sequence[float], energy: float,
                  fit_energy: bool = False) -> FitReport:
    """Fit rate = A exp(-E/kT) + C with E (J) held fixed.

    ``fit_energy=True`` frees E as well, starting from the fixed-E solution;
    that variant is for sensitivity checks only.
    """
    T = np.asarray(temps, dtype=float)
    y = np.asarray(rates, dtype=float)
    if T.shape != y.shape or T.size < 3:
        raise FitError("need at least 3 (temperature, rate) pairs")
    if np.any(T <= 0):
        raise ValueError("temperatures must be positive")
    if not energy > 0:
        raise ValueError("energy must be positive")
    g = np.exp(-energy / (K_B * T))
    gs = float(np.max(g))
    A_mat = np.column_stack([g / gs, np.ones_like(g)])
    coef, *_ = np.linalg.lstsq(A_mat, y, rcond=None)
    if not np.all(np.isfinite(coef)):
        raise FitError("Boltzmann fit did not converge")
    resid = y - A_mat @ coef
    dof = len(y) - 2
    cov = np.linalg.inv(A_mat.T @ A_mat) * (float(resid @ resid) / dof if dof > 0 else 0.0)
    S = np.diag([1.0 / gs, 1.0])
    coef = S @ coef
    cov = S @ cov @ S
    params = {"A": Param(coef[0], math.sqrt(cov[0, 0])),
              "C": Param(coef[1], math.sqrt(cov[1, 1])),
              "E": Param(energy, 0.0)}
    if not fit_energy:
        return FitReport("boltzmann", params, float(np.sqrt(np.mean(resid ** 2))), dof,
                         covariance=cov, notes={"energy_fixed": True})

    # free-E variant: fit log-amplitude to keep the problem well scaled
    E0 = energy

    def model(T, logA, C, e_rel):
        return _boltzmann(T, math.exp(logA), C, e_rel * E0)

    logA0 = math.log(coef[0]) if coef[0] > 0 else math.log(max(np.ptp(y), 1e-30) / gs)
    try:
        popt, pcov = curve_fit(model, T, y, p0=(logA0, coef[1], 1.0), maxfev=20000)
    except RuntimeError as exc:
        raise FitError(f"free-energy Boltzmann fit did not converge: {exc}") from exc
    resid = y - model(T, *popt)
    perr = np.sqrt(np.clip(np.diag(pcov), 0, None))
    A = math.exp(popt[0])
    params = {"A": Param(A, A * perr[0]), "C": Param(popt[1], perr[1]),
              "E": Param(popt[2] * E0, perr[2] * E0)}
    return FitReport("boltzmann_free_energy", params, float(np.sqrt(np.mean(resid ** 2))),
                     len(y) - 3, notes={"energy_fixed": False})


def check_boltzmann_slope(points: Sequence[tuple[float, float]], temperature: float) -> FitReport:
    """Compare the slope of log10(sigma) vs wavenumber with log10(e) h c / kT.

    ``points`` are (wavelength nm, cross section cm^2) pairs.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3:
        raise FitError("need at least 3 (wavelength, sigma) points")
    if not temperature > 0:
        raise ValueError("temperature must be positive")
    wavenumber = 1e7 / pts[:, 0]           # cm^-1
    y = np.log10(pts[:, 1])
    coef, cov, resid, dof = _linear_fit(wavenumber, y)
    expected = math.log10(math.e) * H * C_CM / (K_B * temperature)
    return FitReport(
        model="boltzmann_slope",
        params={"slope": Param(coef[1], math.sqrt(max(cov[1, 1], 0.0))),
                "intercept": Param(coef[0], math.sqrt(max(cov[0, 0], 0.0))),
                "expected_slope": Param(expected, 0.0),
                "ratio": Param(coef[1] / expected, math.sqrt(max(cov[1, 1], 0.0)) / expected)},
        residual_rms=float(np.sqrt(np.mean(resid ** 2))),
        dof=dof,
        notes={"temperature_K": temperature, "abscissa": "wavenumber_cm-1"},
    )


class Verdict(str, Enum):
    ONE_PHOTON = "OnePhoton"
    C2PA = "C2PA"
    E2PA_CONSISTENT = "E2PAConsistent"
    INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class MechanismVerdict:
    verdict: Verdict
    pump_slope: Param
    attenuation_slope: Param
    threshold: float
    rule_trace: str

    def to_dict(self) -> dict:
        return {"verdict": self.verdict.value,
                "pump_slope": {"value": self.pump_slope.value, "stderr": self.pump_slope.stderr},
                "attenuation_slope": {"value": self.attenuation_slope.value,
                                      "stderr": self.attenuation_slope.stderr},
                "threshold": self.threshold,
                "rule_trace": self.rule_trace}


_RULES = (
    (Verdict.ONE_PHOTON, 1.0, 1.0),
    (Verdict.C2PA, 2.0, 2.0),
    (Verdict.E2PA_CONSISTENT, 1.0, 2.0),
)


def classify_slopes(s_p: float, s_a: float, threshold: float = DEFAULT_THRESHOLD):
    """Apply the pump/attenuation truth table; returns (verdict, trace lines)."""
    trace = []
    for verdict, want_p, want_a in _RULES:
        ok = abs(s_p - want_p) <= threshold and abs(s_a - want_a) <= threshold
        trace.append(f"{verdict.value}: |{s_p:.4f}-{want_p:g}|<={threshold:g} and "
                     f"|{s_a:.4f}-{want_a:g}|<={threshold:g} -> {ok}")
        if ok:
            return verdict, trace
    return Verdict.INCONCLUSIVE, trace


def discriminate_mechanism(pump: PowerSeries, attenuation: PowerSeries,
                           threshold: float = DEFAULT_THRESHOLD) -> MechanismVerdict:
    """Classify the excitation mechanism from pump and post-source attenuation sweeps.

    One-photon processes scale linearly in both sweeps, classical 2PA
    quadratically in both. An entangled-pair signal is linear in pump power
    but quadratic in attenuation because losses remove single photons.
    """
    if pump.sweep_kind is not SweepKind.PUMP_POWER:
        raise SeriesError("first series must be a pump_power sweep")
    if attenuation.sweep_kind is not SweepKind.POST_ATTENUATION:
        raise SeriesError("second series must be a post_attenuation sweep")
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    fp = fit_loglog_slope(pump)
    fa = fit_loglog_slope(attenuation)
    s_p, s_a = fp["slope"], fa["slope"]
    verdict, lines = classify_slopes(s_p, s_a, threshold)
    trace = (f"pump slope {s_p:.4f} +/- {fp.stderr('slope'):.4f}; "
             f"attenuation slope {s_a:.4f} +/- {fa.stderr('slope'):.4f}; "
             f"threshold {threshold:g}; " + "; ".join(lines) + f"; verdict {verdict.value}")
    return MechanismVerdict(verdict, fp.params["slope"], fa.params["slope"], threshold, trace)
