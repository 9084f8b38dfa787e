"""Stochastic daily weather and per-timestep atmospheric forcing.

Daily weather for a whole year is drawn up front from the weather stream
(fixed draw order: 365 temperature-noise normals, 365 occurrence uniforms,
365 amount uniforms), after which all sub-daily forcing is a pure function of
(day record, site parameters, time of day) -- no RNG at sub-daily resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .params import SiteParameters
from .rng import RngStream

TWO_PI = 2.0 * math.pi
SIGMA_SB = 5.670374419e-8  # W/m2/K4
SOLAR_DECLINATION_AMP = math.radians(23.44)


@dataclass
class DailyWeather:
    day_of_year: int
    mean_temp: float                 # degC
    diurnal_amplitude_today: float   # degC
    precip_amount: float             # mm/day
    precip_is_snow: bool
    drought_index_contribution: float


@dataclass
class Forcing:
    air_temp: float        # K
    shortwave_down: float  # W/m2
    longwave_down: float   # W/m2
    vpd: float             # kPa
    precip_rate: float     # mm per timestep
    precip_is_snow: bool


@jit
def esat_kpa(t_k: float) -> float:
    """Saturation vapour pressure (Tetens), kPa."""
    t_c = t_k - 273.15
    return 0.6108 * math.exp(17.27 * t_c / (t_c + 237.3))


@jit
def delta_svp_kpa_per_k(t_k: float) -> float:
    """Slope of the saturation vapour pressure curve, kPa/K."""
    t_c = t_k - 273.15
    return 4098.0 * esat_kpa(t_k) / (t_c + 237.3) ** 2


@jit
def cos_zenith(latitude_deg: float, doy: int, hour: float) -> float:
    decl = -SOLAR_DECLINATION_AMP * math.cos(TWO_PI * (doy + 10.0) / 365.0)
    lat = math.radians(latitude_deg)
    hour_angle = math.pi * (hour - 12.0) / 12.0
    return math.sin(lat) * math.sin(decl) + math.cos(lat) * math.cos(decl) * math.cos(hour_angle)


@jit
def shortwave_down(latitude_deg: float, doy: int, hour: float, transmissivity: float,
                   solar_constant: float, cloud_factor: float) -> float:
    mu = cos_zenith(latitude_deg, doy, hour)
    if mu <= 0.0:
        return 0.0
    return solar_constant * transmissivity * mu * cloud_factor


@jit
def air_temperature(mean_temp_c: float, amplitude_c: float, hour: float,
                    peak_hour_after_noon: float) -> float:
    """Diurnal cycle in K, peaking at solar noon + sampled offset."""
    peak = 12.0 + peak_hour_after_noon
    return 273.15 + mean_temp_c + 0.5 * amplitude_c * math.cos(TWO_PI * (hour - peak) / 24.0)


@jit
def longwave_down(t_air_k: float, is_wet_day: bool, eps_clear: float, eps_overcast: float) -> float:
    eps = eps_overcast if is_wet_day else eps_clear
    return eps * SIGMA_SB * t_air_k ** 4


@jit
def vapour_pressure_deficit(t_air_k: float, relative_humidity: float) -> float:
    vpd = esat_kpa(t_air_k) * (1.0 - relative_humidity)
    return vpd if vpd > 0.0 else 0.0


class AnnualWeather:
    """One generated year as flat arrays (kernel-friendly) with record access."""

    __slots__ = ("mean_temp", "amplitude", "precip", "is_snow")

    def __init__(self, mean_temp, amplitude, precip, is_snow):
        self.mean_temp = mean_temp
        self.amplitude = amplitude
        self.precip = precip
        self.is_snow = is_snow

    def day(self, doy: int) -> DailyWeather:
        i = doy - 1
        t = float(self.mean_temp[i])
        precip = float(self.precip[i])
        if precip > 0.0:
            contribution = -precip
        else:
            contribution = max(0.0, t) / 5.0
        return DailyWeather(
            day_of_year=doy,
            mean_temp=t,
            diurnal_amplitude_today=float(self.amplitude[i]),
            precip_amount=precip,
            precip_is_snow=bool(self.is_snow[i]),
            drought_index_contribution=contribution,
        )

    def mean_winter_temp(self) -> float:
        """DJF mean (DOY 335-365 and 1-59), degC."""
        djf = np.concatenate([self.mean_temp[:59], self.mean_temp[334:]])
        return float(djf.mean())

    def __iter__(self):
        return (self.day(d) for d in range(1, 366))

    def __len__(self):
        return 365


def generate_annual_weather(p: SiteParameters, rng: RngStream,
                            noise_scale: float = 1.0) -> AnnualWeather:
    """Generate 365 days of weather; ``noise_scale=0`` gives the
    deterministic (site-specific) temperature path. All three draw blocks are
    consumed regardless of outcomes so the stream position is predictable."""
    days = np.arange(365, dtype=np.float64)
    noise = rng.normal(size=365)
    occurrence = rng.uniform(size=365)
    amount_u = rng.uniform(size=365)

    seasonal = p.mean_annual_temp_offset - p.seasonal_amplitude * np.cos(TWO_PI * days / 365.0)
    mean_temp = seasonal + noise_scale * p.daily_noise_std * noise
    anomaly = mean_temp - seasonal

    is_cold = mean_temp < 0.0
    # Rain probability rises with the day's warm anomaly (mean-preserving);
    # snowfall probability is flat.
    p_rain = np.clip(p.summer_rain_prob * (1.0 + 0.1 * anomaly), 0.0, 1.0)
    p_wet = np.where(is_cold, p.winter_snow_prob, p_rain)
    wet = occurrence < p_wet
    base_amount = np.where(is_cold, p.winter_snow_amount, p.summer_rain_amount)
    precip = np.where(wet, base_amount * (0.5 + amount_u), 0.0)
    is_snow = wet & is_cold

    amplitude = np.where(
        wet,
        p.diurnal_amplitude * p.wet_day_diurnal_suppression,
        p.diurnal_amplitude,
    )
    return AnnualWeather(mean_temp, amplitude, precip, is_snow.astype(np.float64))


def forcing_at(w: DailyWeather, p: SiteParameters, time_of_day: float,
               dt_hours: float = 1.0) -> Forcing:
    """Pure forcing resolution for one moment of one day."""
    if not (0.0 <= time_of_day < 24.0):
        raise ValueError(f"time_of_day must be in [0, 24), got {time_of_day}")
    wet = w.precip_amount > 0.0
    t_air = air_temperature(w.mean_temp, w.diurnal_amplitude_today, time_of_day,
                            p.peak_diurnal_hour)
    cloud = p.cloud_attenuation if wet else 1.0
    sw = shortwave_down(p.latitude, w.day_of_year, time_of_day,
                        p.atmospheric_transmissivity, p.solar_constant, cloud)
    lw = longwave_down(t_air, wet, p.emissivity_atm_clear, p.emissivity_atm_overcast)
    vpd = vapour_pressure_deficit(t_air, p.relative_humidity)
    return Forcing(
        air_temp=t_air,
        shortwave_down=sw,
        longwave_down=lw,
        vpd=vpd,
        precip_rate=w.precip_amount * dt_hours / 24.0,
        precip_is_snow=w.precip_is_snow,
    )


def update_drought_index(previous: float, today: DailyWeather,
                         temp_divisor: float = 5.0) -> float:
    """Accumulate warm dry days, decay with precipitation, clamp at zero."""
    if previous < 0.0:
        raise ValueError("drought index cannot be negative")
    if today.precip_amount > 0.0:
        return max(0.0, previous - today.precip_amount)
    return previous + max(0.0, today.mean_temp) / temp_divisor
