import math

import numpy as np
import pytest

from conftest import make_params, weather_stream
from permaforest import weather as W


def test_midwinter_is_the_seasonal_minimum(midpoint_params):
    annual = W.generate_annual_weather(midpoint_params, weather_stream(), noise_scale=0.0)
    p = midpoint_params
    assert annual.mean_temp[0] == pytest.approx(
        p.mean_annual_temp_offset - p.seasonal_amplitude, abs=1e-12)
    assert annual.mean_temp.argmin() == 0


def test_same_seed_reproduces_the_year(site_params):
    a = W.generate_annual_weather(site_params, weather_stream(3))
    b = W.generate_annual_weather(site_params, weather_stream(3))
    assert np.array_equal(a.mean_temp, b.mean_temp)
    assert np.array_equal(a.precip, b.precip)
    assert np.array_equal(a.is_snow, b.is_snow)


def test_warm_season_wet_day_frequency_matches_rain_probability(midpoint_params):
    # The anomaly multiplier is mean-preserving, so over many years the
    # wet-day frequency among rain-regime (above-freezing) days estimates
    # summer_rain_prob = 0.15. 1000 years x ~180 warm days gives an SE of
    # ~0.0008; the +/-0.02 band is generous.
    wet = warm = 0
    rng = weather_stream(10)
    for _ in range(1000):
        annual = W.generate_annual_weather(midpoint_params, rng)
        mask = annual.mean_temp >= 0.0
        warm += int(mask.sum())
        wet += int(((annual.precip > 0) & mask).sum())
    assert wet / warm == pytest.approx(0.15, abs=0.02)


def test_amplitude_only_suppressed_never_raised(site_params):
    annual = W.generate_annual_weather(site_params, weather_stream(4))
    assert np.all(annual.amplitude <= site_params.diurnal_amplitude + 1e-12)
    wet = annual.precip > 0
    assert np.all(annual.amplitude[wet] < site_params.diurnal_amplitude)


def test_snow_partition_follows_freezing_threshold(site_params):
    annual = W.generate_annual_weather(site_params, weather_stream(5))
    wet = annual.precip > 0
    assert np.array_equal(annual.is_snow[wet] > 0.5, annual.mean_temp[wet] < 0.0)


def test_annual_mean_tracks_the_offset(site_params):
    # cos over a full 365-day cycle sums to zero exactly; the residual is
    # noise of scale sigma/sqrt(365*years).
    rng = weather_stream(6)
    means = [W.generate_annual_weather(site_params, rng).mean_temp.mean()
             for _ in range(50)]
    sigma = site_params.daily_noise_std / math.sqrt(365 * 50)
    assert np.mean(means) == pytest.approx(site_params.mean_annual_temp_offset,
                                           abs=5 * sigma)


def test_night_shortwave_is_zero(site_params):
    annual = W.generate_annual_weather(site_params, weather_stream(7), noise_scale=0.0)
    f = W.forcing_at(annual.day(355), site_params, 0.5)
    assert f.shortwave_down == 0.0


def test_saturated_air_has_zero_vpd():
    p = make_params(relative_humidity=0.8)
    p.values["relative_humidity"] = 1.0
    annual = W.generate_annual_weather(p, weather_stream(8), noise_scale=0.0)
    f = W.forcing_at(annual.day(180), p, 12.0)
    assert f.vpd == 0.0


def test_air_temperature_peaks_at_the_sampled_hour(midpoint_params):
    annual = W.generate_annual_weather(midpoint_params, weather_stream(9), noise_scale=0.0)
    day = annual.day(180)
    peak_hour = 12.0 + midpoint_params.peak_diurnal_hour
    peak = W.forcing_at(day, midpoint_params, peak_hour).air_temp
    hours = np.arange(0, 24, 0.25)
    temps = [W.forcing_at(day, midpoint_params, h).air_temp for h in hours]
    assert peak == pytest.approx(max(temps), abs=1e-9)
    assert peak == pytest.approx(273.15 + day.mean_temp + day.diurnal_amplitude_today / 2,
                                 abs=1e-12)


def test_forcing_rejects_out_of_range_hour(site_params):
    annual = W.generate_annual_weather(site_params, weather_stream(1))
    with pytest.raises(ValueError):
        W.forcing_at(annual.day(1), site_params, 24.0)


def test_drought_index_floors_at_zero():
    day = W.DailyWeather(day_of_year=150, mean_temp=12.0, diurnal_amplitude_today=3.0,
                         precip_amount=30.0, precip_is_snow=False,
                         drought_index_contribution=-30.0)
    assert W.update_drought_index(0.0, day) == 0.0


def test_thirty_hot_dry_days_cross_the_fire_threshold_range():
    # Sustained drought must be able to reach the sampled threshold range
    # [20, 40]: thirty dry days at +15 degC contribute 15/5 = 3 each.
    index = 0.0
    for d in range(30):
        day = W.DailyWeather(day_of_year=170 + d, mean_temp=15.0,
                             diurnal_amplitude_today=6.0, precip_amount=0.0,
                             precip_is_snow=False, drought_index_contribution=3.0)
        index = W.update_drought_index(index, day)
    assert index >= 20.0


def test_drought_index_is_a_pure_function_of_the_day_sequence():
    days = [W.DailyWeather(100 + i, 10.0 + i, 4.0, 5.0 if i % 3 == 0 else 0.0,
                           False, 0.0) for i in range(20)]
    run1 = run2 = 0.0
    for d in days:
        run1 = W.update_drought_index(run1, d)
    for d in days:
        run2 = W.update_drought_index(run2, d)
    assert run1 == run2


def test_forcing_is_pure(site_params):
    annual = W.generate_annual_weather(site_params, weather_stream(2))
    day = annual.day(200)
    f1 = W.forcing_at(day, site_params, 13.0)
    f2 = W.forcing_at(day, site_params, 13.0)
    assert f1 == f2


def test_mean_winter_temp_is_djf(site_params):
    annual = W.generate_annual_weather(site_params, weather_stream(3))
    expected = np.concatenate([annual.mean_temp[:59], annual.mean_temp[334:]]).mean()
    assert annual.mean_winter_temp() == pytest.approx(expected, abs=1e-12)
