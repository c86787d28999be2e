"""Power series: background-subtracted count rates versus excitation level."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

POWER_SERIES_HEADER = ("power_w", "rate_cps", "rate_err_cps", "dwell_s")


class SweepKind(str, Enum):
    PUMP_POWER = "pump_power"
    POST_ATTENUATION = "post_attenuation"


class Axis(str, Enum):
    POWER = "power"
    FLUX = "flux"


class SeriesError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PowerSeries:
    """Count rates measured at ascending excitation powers.

    ``flux_per_watt`` (photons cm^-2 s^-1 W^-1) converts the power column to
    photon flux; it is required when ``axis`` is flux. ``clamped`` lists the
    indices whose background-subtracted rate came out negative and was set
    to zero.
    """

    power: np.ndarray
    rate: np.ndarray
    rate_err: np.ndarray
    dwell: np.ndarray
    sweep_kind: SweepKind = SweepKind.PUMP_POWER
    axis: Axis = Axis.POWER
    flux_per_watt: float | None = None
    clamped: tuple[int, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = len(self.power)
        arrays = {}
        for name in ("power", "rate", "rate_err", "dwell"):
            a = np.array(getattr(self, name), dtype=float)
            if a.ndim == 0:
                a = np.full(n, float(a))
            if a.shape != (n,):
                raise SeriesError(f"{name} must have one entry per point")
            if not np.all(np.isfinite(a)):
                raise SeriesError(f"{name} must be finite")
            a.setflags(write=False)
            arrays[name] = a
        if n < 3:
            raise SeriesError("a power series needs at least 3 points")
        p = arrays["power"]
        if np.any(p <= 0) or np.any(np.diff(p) <= 0):
            raise SeriesError("powers must be positive and strictly ascending")
        if np.any(arrays["rate"] < 0):
            raise SeriesError("rates must be >= 0 (clamp and flag negative points)")
        if np.any(arrays["rate_err"] < 0) or np.any(arrays["dwell"] <= 0):
            raise SeriesError("uncertainties must be >= 0 and dwell times > 0")
        for name, a in arrays.items():
            object.__setattr__(self, name, a)
        object.__setattr__(self, "sweep_kind", SweepKind(self.sweep_kind))
        object.__setattr__(self, "axis", Axis(self.axis))
        object.__setattr__(self, "clamped", tuple(int(i) for i in self.clamped))
        if self.axis is Axis.FLUX and not (self.flux_per_watt and self.flux_per_watt > 0):
            raise SeriesError("flux axis requires a positive flux_per_watt")

    def __len__(self):
        return len(self.power)

    @property
    def flux(self) -> np.ndarray:
        if not self.flux_per_watt:
            raise SeriesError("flux_per_watt unknown for this series")
        return self.power * self.flux_per_watt

    @property
    def x(self) -> np.ndarray:
        """Abscissa in the units named by ``axis``."""
        return self.flux if self.axis is Axis.FLUX else self.power

    def with_axis(self, axis, flux_per_watt: float | None = None) -> "PowerSeries":
        return PowerSeries(self.power, self.rate, self.rate_err, self.dwell,
                           self.sweep_kind, axis,
                           flux_per_watt if flux_per_watt is not None else self.flux_per_watt,
                           self.clamped, dict(self.meta))

    def scaled_rates(self, factor: float) -> "PowerSeries":
        return PowerSeries(self.power, self.rate * factor, self.rate_err * factor,
                           self.dwell, self.sweep_kind, self.axis, self.flux_per_watt,
                           self.clamped, dict(self.meta))


def format_power_series_csv(s: PowerSeries) -> str:
    buf = io.StringIO()
    buf.write(f"# sweep_kind={s.sweep_kind.value}\n")
    buf.write(f"# axis={s.axis.value}\n")
    if s.flux_per_watt:
        buf.write(f"# flux_per_watt={float(s.flux_per_watt)!r}\n")
    if s.clamped:
        buf.write("# clamped=" + ";".join(str(i) for i in s.clamped) + "\n")
    for key in sorted(s.meta):
        buf.write(f"# {key}={s.meta[key]}\n")
    buf.write(",".join(POWER_SERIES_HEADER) + "\n")
    for row in zip(s.power, s.rate, s.rate_err, s.dwell):
        buf.write(",".join(repr(float(v)) for v in row) + "\n")
    return buf.getvalue()


def parse_power_series_csv(text: str, source: str = "<string>") -> PowerSeries:
    meta: dict[str, str] = {}
    body = []
    for line in text.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            key, sep, value = stripped[1:].partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            continue
        body.append(stripped)
    rows = list(csv.reader(body))
    if not rows or tuple(c.strip() for c in rows[0]) != POWER_SERIES_HEADER:
        raise SeriesError(f"{source}: expected header {','.join(POWER_SERIES_HEADER)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    except ValueError as exc:
        raise SeriesError(f"{source}: malformed row ({exc})") from exc
    if data.ndim != 2 or data.shape[1] != 4:
        raise SeriesError(f"{source}: expected 4 columns")
    try:
        sweep = SweepKind(meta.pop("sweep_kind"))
        axis = Axis(meta.pop("axis", "power"))
    except KeyError:
        raise SeriesError(f"{source}: missing '# sweep_kind=' metadata") from None
    except ValueError as exc:
        raise SeriesError(f"{source}: {exc}") from exc
    fpw = meta.pop("flux_per_watt", None)
    clamped = meta.pop("clamped", "")
    return PowerSeries(
        data[:, 0], data[:, 1], data[:, 2], data[:, 3], sweep, axis,
        float(fpw) if fpw is not None else None,
        tuple(int(i) for i in clamped.split(";") if i),
        meta,
    )


def read_power_series_csv(path) -> PowerSeries:
    path = Path(path)
    return parse_power_series_csv(path.read_text(encoding="utf-8"), str(path))
