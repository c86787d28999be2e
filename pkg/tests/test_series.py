import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbasim.series import (
    Axis,
    PowerSeries,
    SeriesError,
    SweepKind,
    format_power_series_csv,
    parse_power_series_csv,
    read_power_series_csv,
)


def make(**kw):
    base = dict(power=[1e-3, 2e-3, 3e-3], rate=[1.0, 4.0, 9.0], rate_err=[0.1, 0.2, 0.3], dwell=10.0)
    base.update(kw)
    return PowerSeries(**base)


def test_basic_properties():
    s = make(flux_per_watt=2.0)
    assert len(s) == 3
    np.testing.assert_array_equal(s.dwell, [10.0] * 3)
    np.testing.assert_array_equal(s.flux, [2e-3, 4e-3, 6e-3])
    np.testing.assert_array_equal(s.x, s.power)
    np.testing.assert_array_equal(s.with_axis("flux").x, s.flux)
    assert s.sweep_kind is SweepKind.PUMP_POWER


@pytest.mark.parametrize("kw", [
    dict(power=[1e-3, 2e-3]),
    dict(power=[1e-3, 1e-3, 2e-3]),
    dict(power=[0.0, 1e-3, 2e-3]),
    dict(rate=[1.0, -1.0, 2.0]),
    dict(rate=[1.0, np.nan, 2.0]),
    dict(rate_err=[-0.1, 0.1, 0.1]),
    dict(dwell=0.0),
    dict(axis="flux"),
    dict(sweep_kind="sideways"),
])
def test_invariants(kw):
    with pytest.raises(ValueError):
        make(**kw)


def test_immutable():
    s = make()
    with pytest.raises(ValueError):
        s.rate[0] = 2.0


def test_flux_needs_conversion():
    with pytest.raises(SeriesError):
        make().flux


def test_csv_round_trip_bit_exact(tmp_path):
    s = make(power=[1e-3, 2e-3 + 1e-19, 3.3e-3], rate=[1 / 3, 4.0, 9.1], sweep_kind="post_attenuation",
             flux_per_watt=2.167213545071109e23, clamped=(0,), meta={"mechanism": "HBA"})
    text = format_power_series_csv(s)
    assert "power_w,rate_cps,rate_err_cps,dwell_s" in text
    assert "# sweep_kind=post_attenuation" in text
    p = tmp_path / "s.csv"
    p.write_text(text)
    back = read_power_series_csv(p)
    for name in ("power", "rate", "rate_err", "dwell"):
        np.testing.assert_array_equal(getattr(back, name), getattr(s, name))
    assert back.sweep_kind is SweepKind.POST_ATTENUATION
    assert back.axis is Axis.POWER
    assert back.flux_per_watt == s.flux_per_watt
    assert back.clamped == (0,)
    assert back.meta == {"mechanism": "HBA"}
    assert format_power_series_csv(back) == text


@settings(max_examples=50)
@given(st.lists(st.floats(1e-9, 1e3), min_size=3, max_size=20, unique=True),
       st.floats(0, 1e6))
def test_csv_round_trip_property(powers, r):
    powers = sorted(powers)
    s = make(power=powers, rate=[r] * len(powers), rate_err=0.0)
    back = parse_power_series_csv(format_power_series_csv(s))
    np.testing.assert_array_equal(back.power, s.power)
    np.testing.assert_array_equal(back.rate, s.rate)


@pytest.mark.parametrize("text", [
    "power_w,rate_cps,rate_err_cps,dwell_s\n1,1,0,1\n2,2,0,1\n3,3,0,1\n",           # no sweep tag
    "# sweep_kind=pump_power\npower,rate\n1,1\n2,2\n3,3\n",
    "# sweep_kind=pump_power\npower_w,rate_cps,rate_err_cps,dwell_s\n1,x,0,1\n2,2,0,1\n3,3,0,1\n",
    "# sweep_kind=diagonal\npower_w,rate_cps,rate_err_cps,dwell_s\n1,1,0,1\n2,2,0,1\n3,3,0,1\n",
])
def test_csv_malformed(text):
    with pytest.raises(SeriesError):
        parse_power_series_csv(text)


def test_scaled_rates():
    s = make().scaled_rates(2.0)
    np.testing.assert_array_equal(s.rate, [2.0, 8.0, 18.0])
    np.testing.assert_array_equal(s.rate_err, [0.2, 0.4, 0.6])
