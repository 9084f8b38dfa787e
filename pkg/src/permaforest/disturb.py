"""Stochastic disturbances: within-summer fire, annual insect outbreaks.

Each simulated year consumes a fixed number of draws from the disturbance
stream (365 daily fire uniforms, one fire-severity uniform, one insect
uniform) regardless of outcomes, so replay stays deterministic across branchy
event histories. At most one fire per year; checks after an ignition are
skipped but their draws are still consumed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._jit import jit
from .params import SiteParameters
from .rng import RngStream
from .stand import AGE_CANOPY_FACTORS, CONIFER, DECIDUOUS, StandState


@dataclass
class DisturbanceReport:
    fire_occurred: bool = False
    fire_day: int = 0
    fire_mortality_fraction: float = 0.0
    fire_carbon_fraction: float = 0.0
    fire_carbon_combusted: float = 0.0
    insect_occurred: bool = False
    insect_mortality_fraction: float = 0.0
    insect_carbon_fraction: float = 0.0
    insect_carbon_to_soil: float = 0.0


@jit
def fire_ignition_probability(base_probability: float, drought_index: float,
                              drought_threshold: float, mean_temp_c: float,
                              hot_day_temp: float, drought_mult_max: float,
                              conifer_weight: float, conifer_fraction: float) -> float:
    """Daily ignition probability; zero unless the drought index has crossed
    the threshold on a hot day. Conifer-heavy stands burn more readily."""
    if drought_index < drought_threshold or mean_temp_c < hot_day_temp:
        return 0.0
    drought_mult = drought_index / drought_threshold
    if drought_mult > drought_mult_max:
        drought_mult = drought_mult_max
    prob = base_probability * drought_mult * (1.0 + conifer_weight * conifer_fraction)
    return prob if prob < 1.0 else 1.0


@jit
def insect_outbreak_probability(base_probability: float, mean_winter_temp_c: float,
                                winter_ref_c: float, winter_slope: float,
                                winter_mult_min: float, winter_mult_max: float,
                                density: float, density_ref: float,
                                density_mult_min: float, density_mult_max: float) -> float:
    """Annual outbreak probability; warm winters and dense stands raise it."""
    winter_mult = 1.0 + winter_slope * (mean_winter_temp_c - winter_ref_c)
    if winter_mult < winter_mult_min:
        winter_mult = winter_mult_min
    elif winter_mult > winter_mult_max:
        winter_mult = winter_mult_max
    density_mult = density / density_ref
    if density_mult < density_mult_min:
        density_mult = density_mult_min
    elif density_mult > density_mult_max:
        density_mult = density_mult_max
    prob = base_probability * winter_mult * density_mult
    return prob if prob < 1.0 else 1.0


def fire_check(stand: StandState, p: SiteParameters, drought_index: float,
               mean_temp_c: float, rng: RngStream) -> DisturbanceReport:
    """One daily fire check. Consumes exactly two draws (ignition, severity)
    on every call so the no-event path costs the same stream position."""
    u_ignite = rng.uniform()
    u_severity = rng.uniform()
    report = DisturbanceReport()
    prob = fire_ignition_probability(
        p.fire_base_probability, drought_index, p.fire_drought_threshold, mean_temp_c,
        p.fire_hot_day_temp, p.fire_drought_mult_max, p.fire_conifer_weight,
        stand.conifer_fraction())
    if u_ignite < prob:
        report.fire_occurred = True
        report.fire_mortality_fraction = (
            p.fire_severity_low + (p.fire_severity_high - p.fire_severity_low) * u_severity)
        # Fire kills all age classes at the same fraction, so the carbon
        # share equals the stem fraction.
        report.fire_carbon_fraction = report.fire_mortality_fraction
    return report


def apply_fire_to_stems(stems: np.ndarray, mortality_fraction: float) -> np.ndarray:
    return stems * (1.0 - mortality_fraction)


def insect_mortality(stems: np.ndarray, rate: float, deciduous_bias: float):
    """Kill conifers at ``rate`` and deciduous at ``rate * bias``.

    Returns (new_stems, stem_mortality_fraction, carbon_fraction) where the
    carbon fraction is canopy-factor weighted.
    """
    killed = np.zeros_like(stems)
    killed[CONIFER] = stems[CONIFER] * rate
    killed[DECIDUOUS] = stems[DECIDUOUS] * rate * deciduous_bias
    total = stems.sum()
    stem_fraction = killed.sum() / total if total > 0.0 else 0.0
    weighted = (stems * AGE_CANOPY_FACTORS).sum()
    carbon_fraction = (killed * AGE_CANOPY_FACTORS).sum() / weighted if weighted > 0.0 else 0.0
    return stems - killed, float(stem_fraction), float(carbon_fraction)


def insect_check(stand: StandState, p: SiteParameters, mean_winter_temp_c: float,
                 rng: RngStream) -> DisturbanceReport:
    """Annual insect-outbreak check; one draw consumed on every call."""
    u = rng.uniform()
    report = DisturbanceReport()
    prob = insect_outbreak_probability(
        p.insect_base_probability, mean_winter_temp_c, p.insect_winter_ref,
        p.insect_winter_slope, p.insect_winter_mult_min, p.insect_winter_mult_max,
        stand.density(), p.insect_density_ref, p.insect_density_mult_min,
        p.insect_density_mult_max)
    if u < prob:
        report.insect_occurred = True
        _, stem_frac, carbon_frac = insect_mortality(
            stand.age.stems, p.insect_mortality_rate, p.insect_deciduous_bias)
        report.insect_mortality_fraction = stem_frac
        report.insect_carbon_fraction = carbon_frac
    return report
