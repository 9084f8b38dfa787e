"""Episode-level physics parameters: sampling, pinning, normalization.

The site-parameter vector has exactly 62 slots. Slots 0-33 are sampled per
episode from uniform ranges (fixed draw order = slot order, so replay is
deterministic); slots 34-61 are implementer-fixed physics constants exposed
through the same normalized vector so a policy observes the complete physics
configuration. The slot table is written to ``data/param_manifest.txt`` and
any key in it can be pinned from a config file.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation
from .rng import RngStream

# --- slots 0-33: sampled each episode (key, low, high, units) ---------------
SAMPLED_ROWS = [
    ("latitude", 56.0, 65.0, "deg N"),
    ("mean_annual_temp_offset", -10.0, -5.0, "degC"),
    ("seasonal_amplitude", 20.0, 25.0, "degC"),
    ("diurnal_amplitude", 4.0, 8.0, "degC"),
    ("peak_diurnal_hour", 3.0, 5.0, "h after solar noon"),
    ("daily_noise_std", 1.0, 2.0, "degC"),
    ("relative_humidity", 0.6, 0.8, "fraction"),
    ("summer_rain_prob", 0.10, 0.20, "1/day"),
    ("summer_rain_amount", 10.0, 20.0, "mm/day"),
    ("winter_snow_prob", 0.15, 0.30, "1/day"),
    ("winter_snow_amount", 3.0, 8.0, "mm/day"),
    ("soil_conductivity", 0.8, 1.6, "W/m/K"),
    ("max_water_content", 100.0, 200.0, "mm"),
    ("stress_threshold", 0.3, 0.6, "fraction"),
    ("deep_boundary_temp", 268.0, 272.0, "K"),
    ("max_lai_conifer", 3.0, 5.0, "m2/m2"),
    ("max_lai_deciduous", 4.0, 6.0, "m2/m2"),
    ("base_albedo_conifer", 0.07, 0.11, "fraction"),
    ("base_albedo_deciduous", 0.15, 0.20, "fraction"),
    ("base_respiration", 0.30, 0.40, "kgC/m2/yr"),
    ("soil_respiration", 0.4, 0.6, "kgC/m2/yr"),
    ("q10_factor", 1.8, 2.3, "-"),
    ("litterfall_fraction", 0.03, 0.04, "1/yr"),
    ("natural_mortality", 0.02, 0.03, "1/yr"),
    ("recruitment_rate", 0.005, 0.015, "1/yr"),
    ("max_natural_density", 1500.0, 2000.0, "stems/ha"),
    ("fire_drought_threshold", 20.0, 40.0, "index"),
    ("fire_base_probability", 0.0001, 0.0005, "1/yr"),
    ("insect_base_probability", 0.02, 0.05, "1/yr"),
    ("insect_mortality_rate", 0.02, 0.05, "fraction"),
    ("growth_start_day", 130.0, 150.0, "DOY"),
    ("fall_start_day", 260.0, 280.0, "DOY"),
    ("growth_rate", 0.08, 0.15, "1/day"),
    ("fall_rate", 0.08, 0.15, "1/day"),
]

# --- slots 34-61: fixed constants (key, default, low, high, units) ----------
# The (low, high) bounds exist only to place the constant in [0, 1] for the
# observation vector; overriding a constant moves its normalized slot value.
FIXED_ROWS = [
    ("atmospheric_transmissivity", 0.75, 0.60, 0.90, "-"),
    ("cloud_attenuation", 0.40, 0.20, 0.80, "-"),
    ("emissivity_atm_clear", 0.78, 0.70, 0.85, "-"),
    ("emissivity_atm_overcast", 0.95, 0.90, 1.00, "-"),
    ("wet_day_diurnal_suppression", 0.50, 0.30, 0.80, "-"),
    ("emissivity_canopy", 0.97, 0.95, 1.00, "-"),
    ("albedo_snow", 0.80, 0.60, 0.90, "fraction"),
    ("albedo_soil", 0.15, 0.05, 0.30, "fraction"),
    ("albedo_leafless_canopy", 0.30, 0.15, 0.45, "fraction"),
    ("priestley_taylor_alpha", 1.26, 1.00, 1.50, "-"),
    ("psychrometric_constant", 0.066, 0.050, 0.080, "kPa/K"),
    ("photosynthesis_energy_per_gc", 5.0e5, 1.0e5, 1.0e6, "J/gC"),
    ("par_fraction", 0.48, 0.40, 0.55, "-"),
    ("lue_base", 1.0, 0.5, 2.0, "gC/MJ APAR"),
    ("conductance_canopy_air", 20.0, 5.0, 40.0, "W/m2/K"),
    ("conductance_trunk_air", 5.0, 1.0, 15.0, "W/m2/K"),
    ("conductance_snow_air", 8.0, 2.0, 20.0, "W/m2/K"),
    ("conductance_soil_air", 10.0, 2.0, 25.0, "W/m2/K"),
    ("conductance_canopy_trunk", 5.0, 1.0, 15.0, "W/m2/K"),
    ("conductance_trunk_ground", 2.0, 0.5, 8.0, "W/m2/K"),
    ("heat_capacity_trunk", 2.0e5, 5.0e4, 6.0e5, "J/m2/K"),
    ("heat_capacity_soil_surface", 6.0e5, 2.0e5, 2.0e6, "J/m2/K"),
    ("heat_capacity_soil_deep", 8.0e6, 2.0e6, 2.0e7, "J/m2/K"),
    ("snowpack_conductivity", 0.21, 0.10, 0.50, "W/m/K"),
    ("snow_density_ratio", 0.25, 0.10, 0.40, "-"),
    ("interception_conifer", 0.45, 0.20, 0.60, "fraction"),
    ("interception_deciduous", 0.25, 0.10, 0.40, "fraction"),
    ("soil_depth_deep_boundary", 2.5, 1.0, 5.0, "m"),
]

# --- unslotted constants: config keys outside the observation vector --------
UNSLOTTED = {
    "emissivity_soil": (0.95, "-"),
    "emissivity_snow": (0.98, "-"),
    "heat_capacity_snow_min": (2.0e5, "J/m2/K, explicit-step stability floor"),
    "soil_depth_surface_deep": (1.5, "m, node-centre distance surface->deep"),
    "soil_surface_layer": (0.3, "m, surface layer for snow contact resistance"),
    "canopy_snow_capacity_per_lai": (0.5, "mm SWE per unit LAI"),
    "lai_half_saturation_density": (500.0, "stems/ha"),
    "canopy_extinction": (0.5, "-, cover = 1 - exp(-k*LAI)"),
    "vpd_stress_scale": (1.5, "kPa"),
    "respiration_t_ref": (283.15, "K"),
    "biomass_reference_pool": (10.0, "kgC/m2"),
    "soil_reference_pool": (20.0, "kgC/m2"),
    "gpp_t_min": (-5.0, "degC, photosynthesis off below"),
    "gpp_t_full": (5.0, "degC, photosynthesis unstressed above"),
    "latent_heat_fusion": (3.34e5, "J/kg"),
    "latent_heat_vaporization": (2.50e6, "J/kg"),
    "solar_constant": (1361.0, "W/m2"),
    "hwp_stored_fraction": (0.95, "fraction of thinned carbon kept as product"),
    "fire_hot_day_temp": (15.0, "degC daily mean gate"),
    "fire_drought_mult_max": (4.0, "-"),
    "fire_conifer_weight": (1.0, "-, +100% ignition at pure conifer"),
    "fire_severity_low": (0.2, "fraction"),
    "fire_severity_high": (0.6, "fraction"),
    "fire_combust_fraction": (0.7, "fraction of killed biomass combusted"),
    "insect_winter_ref": (-25.0, "degC"),
    "insect_winter_slope": (0.08, "1/degC"),
    "insect_winter_mult_min": (0.2, "-"),
    "insect_winter_mult_max": (3.0, "-"),
    "insect_density_ref": (1000.0, "stems/ha"),
    "insect_density_mult_min": (0.5, "-"),
    "insect_density_mult_max": (2.0, "-"),
    "insect_deciduous_bias": (0.25, "deciduous kill rate / conifer kill rate"),
    "mortality_density_coeff": (0.15, "1/yr at full overshoot"),
    "mortality_density_onset": (0.8, "fraction of max natural density"),
    "demography_noise_low": (0.8, "-"),
    "demography_noise_high": (1.2, "-"),
    "drought_temp_divisor": (5.0, "degC per index unit per day"),
    "drought_carryover": (0.25, "fraction kept across years"),
    "initial_biomass_carbon": (4.0, "kgC/m2"),
    "initial_soil_carbon": (10.0, "kgC/m2"),
    "initial_pool_jitter": (0.25, "+/- fraction, generalist mode"),
    "initial_swc_fraction": (0.5, "of max water content"),
    "initial_density": (1000.0, "stems/ha"),
    "initial_conifer_fraction": (0.5, "-"),
    "thaw_degree_day_divisor": (8.0e6, "J/m2 per degC-day"),
    "spin_up_years": (0.0, "physics-only years before year 1"),
}

N_SAMPLED = len(SAMPLED_ROWS)
N_SLOTS = N_SAMPLED + len(FIXED_ROWS)
assert N_SLOTS == 62, N_SLOTS

SAMPLED_KEYS = [row[0] for row in SAMPLED_ROWS]
SAMPLED_RANGES = {k: (lo, hi) for k, lo, hi, _ in SAMPLED_ROWS}
FIXED_KEYS = [row[0] for row in FIXED_ROWS]
FIXED_DEFAULTS = {k: v for k, v, _, _, _ in FIXED_ROWS}
FIXED_RANGES = {k: (lo, hi) for k, _, lo, hi, _ in FIXED_ROWS}
UNSLOTTED_DEFAULTS = {k: v for k, (v, _) in UNSLOTTED.items()}

ALL_PHYSICS_KEYS = SAMPLED_KEYS + FIXED_KEYS + list(UNSLOTTED)


@dataclass
class SiteParameters:
    """Sampled site parameters plus the resolved physics constants.

    ``values`` holds the 34 sampled fields by key; ``constants`` holds the 28
    slotted fixed constants and all unslotted constants (after any config
    overrides). Immutable by convention once built.
    """

    values: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)

    def __getattr__(self, key):
        values = object.__getattribute__(self, "values")
        if key in values:
            return values[key]
        constants = object.__getattribute__(self, "constants")
        if key in constants:
            return constants[key]
        raise AttributeError(key)

    def __getitem__(self, key):
        if key in self.values:
            return self.values[key]
        return self.constants[key]

    def validate(self):
        for key, (lo, hi) in SAMPLED_RANGES.items():
            v = self.values[key]
            if not (lo <= v <= hi):
                raise ContractViolation(
                    f"site parameter {key}={v} outside sampling range [{lo}, {hi}]"
                )
        if self.values["growth_start_day"] >= self.values["fall_start_day"]:
            raise ContractViolation("growth_start_day must precede fall_start_day")
        if self.values["deep_boundary_temp"] > 273.15:
            raise ContractViolation("deep boundary must be at or below freezing")
        return self

    def as_dict(self) -> dict:
        return {**self.values, **self.constants}


def _resolved_constants(overrides: dict | None) -> dict:
    consts = {**FIXED_DEFAULTS, **UNSLOTTED_DEFAULTS}
    if overrides:
        for key, value in overrides.items():
            if key in consts:
                consts[key] = float(value)
    return consts


def sample_site_parameters(rng: RngStream, overrides: dict | None = None) -> SiteParameters:
    """Draw one parameter set; one uniform per slot, in slot order.

    A pinned key (in ``overrides``) still consumes its draw so the sequence
    seen by later slots never shifts.
    """
    values = {}
    for key, lo, hi, _ in SAMPLED_ROWS:
        drawn = rng.uniform(lo, hi)
        if overrides and key in overrides:
            drawn = float(overrides[key])
        values[key] = drawn
    return SiteParameters(values, _resolved_constants(overrides)).validate()


def fixed_site_parameters(site_seed: int, overrides: dict | None = None) -> SiteParameters:
    """One sample frozen by ``site_seed``; repeated calls are identical."""
    return sample_site_parameters(
        RngStream(site_seed, stream="parameters", episode=0), overrides
    )


def normalize_site_parameters(p: SiteParameters) -> np.ndarray:
    """Map the full parameter set onto the 62-slot [0, 1] vector."""
    out = np.empty(N_SLOTS, dtype=np.float64)
    for i, (key, lo, hi, _) in enumerate(SAMPLED_ROWS):
        v = p.values[key]
        if not (lo <= v <= hi):
            raise ContractViolation(f"{key}={v} outside [{lo}, {hi}]")
        out[i] = (v - lo) / (hi - lo)
    for j, (key, _, lo, hi, _) in enumerate(FIXED_ROWS):
        out[N_SAMPLED + j] = (p.constants[key] - lo) / (hi - lo)
    return out


def manifest_text() -> str:
    """Render the slot table (plus unslotted keys) as plain text."""
    lines = [
        "# Site-parameter manifest: slot index, key, kind, range, default, units.",
        "# Slots 0-33 are sampled uniformly per episode in slot order;",
        "# slots 34-61 are fixed constants exposed in the same normalized vector.",
        "# Any key below may be pinned from a config file (key = value).",
        "#",
        f"# {'slot':<4} {'key':<32} {'kind':<8} {'low':>12} {'high':>12} {'default':>12}  units",
    ]
    for i, (key, lo, hi, units) in enumerate(SAMPLED_ROWS):
        lines.append(f"{i:<6} {key:<32} {'sampled':<8} {lo:>12g} {hi:>12g} {'-':>12}  {units}")
    for j, (key, default, lo, hi, units) in enumerate(FIXED_ROWS):
        lines.append(
            f"{N_SAMPLED + j:<6} {key:<32} {'fixed':<8} {lo:>12g} {hi:>12g} {default:>12g}  {units}"
        )
    lines.append("#")
    lines.append("# Unslotted constants (config keys, not part of the observation vector):")
    for key, (value, units) in UNSLOTTED.items():
        lines.append(f"{'-':<6} {key:<32} {'const':<8} {'-':>12} {'-':>12} {value:>12g}  {units}")
    return "\n".join(lines) + "\n"


def write_manifest(path) -> None:
    with open(path, "w") as fh:
        fh.write(manifest_text())
