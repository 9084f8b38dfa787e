import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from permaforest import hydro as H

LF, LV = 3.34e5, 2.50e6


def test_partition_arithmetic_case():
    # 10 mm snow, efficiency 0.4, empty canopy with 5 mm capacity.
    swe_g, swe_c, swc = H.partition_precipitation(10.0, True, 0.0, 0.0, 50.0, 0.4, 5.0)
    assert swe_c == pytest.approx(4.0, abs=1e-12)
    assert swe_g == pytest.approx(6.0, abs=1e-12)
    assert swc == 50.0


def test_full_canopy_passes_snow_through():
    swe_g, swe_c, swc = H.partition_precipitation(10.0, True, 20.0, 5.0, 50.0, 0.4, 5.0)
    assert swe_c == 5.0
    assert swe_g == 30.0


def test_rain_reaches_soil_or_snowpack():
    swe_g, swe_c, swc = H.partition_precipitation(8.0, False, 0.0, 1.0, 50.0, 0.4, 5.0)
    assert swc == 58.0 and swe_g == 0.0
    swe_g, swe_c, swc = H.partition_precipitation(8.0, False, 12.0, 1.0, 50.0, 0.4, 5.0)
    assert swe_g == 20.0 and swc == 50.0  # rain-on-snow refreezes into the pack


def test_zero_energy_leaves_state_unchanged():
    out = H.apply_melt_and_et(10.0, 2.0, 80.0, 150.0, 0.0, 0.0, 0.0, 0.0, LF, LV, 3600.0)
    assert out[:3] == (10.0, 2.0, 80.0)
    assert out[3] == out[4] == out[5] == 0.0


def test_overflow_runs_off_exactly():
    # soil at capacity, 5 mm of melt arrives -> 5 mm runoff
    melt_flux = 5.0 * LF / 3600.0
    swe_g, swe_c, swc, melt, et, runoff = H.apply_melt_and_et(
        5.0, 0.0, 150.0, 150.0, 0.0, melt_flux, 0.0, 0.0, LF, LV, 3600.0)
    assert melt == pytest.approx(5.0, rel=1e-12)
    assert runoff == pytest.approx(5.0, rel=1e-12)
    assert swc == 150.0


def test_melt_capped_by_store():
    melt_flux = 50.0 * LF / 3600.0  # energy to melt far more than exists
    swe_g, swe_c, swc, melt, et, runoff = H.apply_melt_and_et(
        2.0, 0.5, 0.0, 150.0, melt_flux, melt_flux, 0.0, 0.0, LF, LV, 3600.0)
    assert swe_g == 0.0 and swe_c == 0.0
    assert melt == pytest.approx(2.5, rel=1e-12)


def test_et_cannot_drive_swc_negative():
    le = 100.0 * LV / 3600.0
    *_, et, runoff = H.apply_melt_and_et(0.0, 0.0, 1.5, 150.0, 0.0, 0.0, le, 0.0,
                                         LF, LV, 3600.0)
    assert et == pytest.approx(1.5, rel=1e-12)
    assert runoff == 0.0


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=2**31))
def test_per_timestep_mass_conservation(seed):
    rng = np.random.default_rng(seed)
    swe_g, swe_c, swc = rng.uniform(0, 50), rng.uniform(0, 5), rng.uniform(0, 150)
    stores0 = swe_g + swe_c + swc
    precip = rng.uniform(0, 2)
    is_snow = bool(rng.integers(2))
    swe_g, swe_c, swc = H.partition_precipitation(precip, is_snow, swe_g, swe_c, swc,
                                                  rng.uniform(0, 0.6), rng.uniform(0, 3))
    assert swe_g + swe_c + swc == pytest.approx(stores0 + precip, rel=1e-12)
    swe_g, swe_c, swc, melt, et, runoff = H.apply_melt_and_et(
        swe_g, swe_c, swc, 150.0, rng.uniform(0, 200), rng.uniform(0, 200),
        rng.uniform(0, 100), rng.uniform(0, 100), LF, LV, 3600.0)
    assert swe_g + swe_c + swc + et + runoff == pytest.approx(stores0 + precip, rel=1e-12)
    assert min(swe_g, swe_c, swc) >= 0.0


def test_annual_closure_on_a_randomized_year():
    # Ledger oracle: drive the two update functions with a random daily
    # series and check precip_in == d(stores) + ET + runoff to 1e-6 relative.
    rng = np.random.default_rng(12)
    state = H.WaterState(swc=75.0)
    stores0 = state.stores()
    for day in range(365):
        precip = rng.uniform(0, 12) if rng.random() < 0.3 else 0.0
        is_snow = day < 100 or day > 300
        state.swe_ground, state.swe_canopy, state.swc = H.partition_precipitation(
            precip, is_snow, state.swe_ground, state.swe_canopy, state.swc, 0.4, 2.0)
        state.precip_total += precip
        out = H.apply_melt_and_et(
            state.swe_ground, state.swe_canopy, state.swc, 150.0,
            rng.uniform(0, 30), rng.uniform(0, 60), rng.uniform(0, 80),
            rng.uniform(0, 40), LF, LV, 86400.0)
        state.swe_ground, state.swe_canopy, state.swc = out[:3]
        state.melt_total += out[3]
        state.et_total += out[4]
        state.runoff_total += out[5]
    residual = state.precip_total - ((state.stores() - stores0)
                                     + state.et_total + state.runoff_total)
    assert abs(residual) / max(1.0, state.precip_total) < 1e-6
