"""Age-structured stand state: management, physical parameters, demography.

Five age classes per species (seedling 0-5, sapling 6-20, young 21-50,
mature 51-100, old 101+ years). Stems are non-negative reals per hectare;
annual aging moves 1/width of each class to the next. Carbon removed by
management is weighted by per-class canopy factors, which double as relative
biomass-per-stem weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .params import SiteParameters
from .rng import RngStream

AGE_CLASSES = ("seedling", "sapling", "young", "mature", "old")
CLASS_WIDTHS = np.array([5.0, 15.0, 30.0, 50.0, math.inf])
TRANSITION_FRACTIONS = np.array([1.0 / 5.0, 1.0 / 15.0, 1.0 / 30.0, 1.0 / 50.0, 0.0])
SPECIES = ("conifer", "deciduous")
CONIFER, DECIDUOUS = 0, 1

# Relative canopy development (and biomass-per-stem weight) by age class.
AGE_CANOPY_FACTORS = np.array([0.2, 0.5, 0.8, 1.0, 0.9])
# Light-use efficiency scaling by age class (young stands fix carbon faster
# per unit canopy, senescent stands slower).
AGE_LUE_FACTORS = np.array([1.1, 1.2, 1.1, 0.9, 0.7])

# Thinning removes from the oldest class first.
THINNING_ORDER = (4, 3, 2, 1, 0)


@dataclass
class AgeDistribution:
    """stems[species, age_class], stems/ha."""

    stems: np.ndarray = field(default_factory=lambda: np.zeros((2, 5)))

    def copy(self) -> "AgeDistribution":
        return AgeDistribution(self.stems.copy())

    def total(self) -> float:
        return float(self.stems.sum())

    def conifer_fraction(self) -> float:
        total = self.total()
        if total <= 0.0:
            return 0.5
        # the two sums associate differently, so the ratio can land 1 ulp
        # outside [0, 1] for a single-species stand; clamp it
        return float(min(1.0, max(0.0, self.stems[CONIFER].sum() / total)))

    def class_fractions(self) -> np.ndarray:
        """(2, 5) fractions of total stems; zeros for an empty stand."""
        total = self.total()
        if total <= 0.0:
            return np.zeros((2, 5))
        return self.stems / total

    def validate(self):
        if (self.stems < 0.0).any():
            raise ValueError("negative stem count")
        return self


@dataclass
class StandState:
    age: AgeDistribution
    biomass_carbon: float   # kgC/m2
    soil_carbon: float      # kgC/m2
    hwp_carbon_cumulative: float = 0.0
    year: int = 0

    def density(self) -> float:
        return self.age.total()

    def conifer_fraction(self) -> float:
        return self.age.conifer_fraction()

    def copy(self) -> "StandState":
        return replace(self, age=self.age.copy())

    def to_json(self) -> str:
        return json.dumps({
            "stems": self.age.stems.tolist(),
            "biomass_carbon": self.biomass_carbon,
            "soil_carbon": self.soil_carbon,
            "hwp_carbon_cumulative": self.hwp_carbon_cumulative,
            "year": self.year,
        })

    @staticmethod
    def from_json(text: str) -> "StandState":
        raw = json.loads(text)
        return StandState(
            age=AgeDistribution(np.asarray(raw["stems"], dtype=np.float64)),
            biomass_carbon=float(raw["biomass_carbon"]),
            soil_carbon=float(raw["soil_carbon"]),
            hwp_carbon_cumulative=float(raw["hwp_carbon_cumulative"]),
            year=int(raw["year"]),
        )


@dataclass
class PhysicalParams:
    lai: float
    lai_conifer: float
    lai_deciduous: float
    canopy_albedo: float
    canopy_area_fraction: float
    interception_efficiency: float
    canopy_snow_capacity: float   # mm SWE
    lue_effective: float          # gC per MJ absorbed PAR


@dataclass
class ManagementOutcome:
    stems_removed: float = 0.0
    stems_planted: float = 0.0
    removed_carbon: float = 0.0
    hwp_stored: float = 0.0
    harvest_loss: float = 0.0
    ineffective_thinning: bool = False
    ineffective_planting: bool = False
    density_delta: float = 0.0
    mix_delta: float = 0.0


@dataclass
class DemographyReport:
    mortality_stems: float = 0.0
    recruitment_stems: float = 0.0
    mortality_rate: float = 0.0
    mortality_carbon_fraction: float = 0.0


def _zero_tiny_negatives(stems: np.ndarray):
    """Clamp float residue from exact-removal arithmetic; anything beyond
    rounding noise is a real bug and stays for validate() to catch."""
    tiny = (stems < 0.0) & (stems > -1e-9)
    stems[tiny] = 0.0


def carbon_weighted_fraction(removed: np.ndarray, before: np.ndarray) -> float:
    """Share of pool carbon carried by ``removed`` stems, canopy-factor weighted."""
    denom = float((before * AGE_CANOPY_FACTORS).sum())
    if denom <= 0.0:
        return 0.0
    return float((removed * AGE_CANOPY_FACTORS).sum() / denom)


def apply_management(s: StandState, density_change: float, target_conifer_fraction: float,
                     p: SiteParameters, safe_min_density: float = 150.0,
                     max_density: float = 2000.0,
                     hwp_fraction: float | None = None) -> tuple[StandState, ManagementOutcome]:
    """Thin (oldest first, never below the floor) or plant seedlings.

    Invalid requests never fail; they set the ineffective-action flags that
    feed the reward penalties.
    """
    out = ManagementOutcome()
    new = s.copy()
    stems = new.age.stems
    before = s.age.stems.copy()
    cf_before = s.conifer_fraction()
    hwp_frac = p.hwp_stored_fraction if hwp_fraction is None else hwp_fraction

    if density_change < 0.0:
        requested = -density_change
        old_before = float(before[:, 4].sum())
        removable = max(0.0, s.density() - safe_min_density)
        to_remove = min(requested, removable)
        removed = np.zeros((2, 5))
        remaining = to_remove
        for c in THINNING_ORDER:
            if remaining <= 0.0:
                break
            in_class = float(stems[:, c].sum())
            if in_class <= 0.0:
                continue
            take = min(remaining, in_class)
            share = stems[:, c] / in_class
            removed[:, c] = np.minimum(take * share, stems[:, c])
            stems[:, c] -= removed[:, c]
            _zero_tiny_negatives(stems)
            remaining -= take
        out.stems_removed = float(removed.sum())
        frac = carbon_weighted_fraction(removed, before)
        out.removed_carbon = s.biomass_carbon * frac
        out.hwp_stored = out.removed_carbon * hwp_frac
        out.harvest_loss = out.removed_carbon - out.hwp_stored
        new.biomass_carbon = max(0.0, s.biomass_carbon - out.removed_carbon)
        new.hwp_carbon_cumulative = s.hwp_carbon_cumulative + out.hwp_stored
        out.ineffective_thinning = old_before <= 0.0 or out.stems_removed < requested - 1e-9

    elif density_change > 0.0:
        space = max(0.0, max_density - s.density())
        planted = min(density_change, space)
        if planted <= 0.0:
            out.ineffective_planting = True
        else:
            stems[CONIFER, 0] += planted * target_conifer_fraction
            stems[DECIDUOUS, 0] += planted * (1.0 - target_conifer_fraction)
            out.stems_planted = planted

    new.age.validate()
    out.density_delta = out.stems_planted - out.stems_removed
    out.mix_delta = new.conifer_fraction() - cf_before
    return new, out


def phenology_factor(doy: float, p: SiteParameters) -> float:
    """Deciduous leaf-on fraction: logistic ramp up at growth onset, down at
    senescence onset."""
    up = 1.0 / (1.0 + math.exp(-p.growth_rate * (doy - p.growth_start_day)))
    down = 1.0 / (1.0 + math.exp(-p.fall_rate * (doy - p.fall_start_day)))
    return up * (1.0 - down)


def derive_physical_params(s: StandState, p: SiteParameters,
                           phenology: float) -> PhysicalParams:
    """Recompute the stand's physical coupling parameters.

    LAI saturates with density and is scaled by age-class canopy factors;
    deciduous LAI additionally follows the leaf phenology. Albedo blends the
    species values, reverting deciduous cover toward the leafless value.
    """
    if not (0.0 <= phenology <= 1.0):
        raise ValueError(f"phenology factor out of range: {phenology}")
    total = s.density()
    if total <= 0.0:
        return PhysicalParams(0.0, 0.0, 0.0, p.albedo_leafless_canopy, 0.0, 0.0, 0.0,
                              p.lue_base)

    saturation = total / (total + p.lai_half_saturation_density)
    weighted = (s.age.stems * AGE_CANOPY_FACTORS).sum(axis=1) / total
    pot_con = p.max_lai_conifer * saturation * float(weighted[CONIFER])
    pot_dec = p.max_lai_deciduous * saturation * float(weighted[DECIDUOUS])
    lai_con = pot_con
    lai_dec = pot_dec * phenology
    lai = lai_con + lai_dec

    pot_total = pot_con + pot_dec
    if pot_total > 0.0:
        w_con = pot_con / pot_total
    else:
        w_con = 0.0
    albedo_dec = phenology * p.base_albedo_deciduous + (1.0 - phenology) * p.albedo_leafless_canopy
    albedo = w_con * p.base_albedo_conifer + (1.0 - w_con) * albedo_dec

    interception = (w_con * p.interception_conifer
                    + (1.0 - w_con) * p.interception_deciduous) * lai / (lai + 1.0)
    lue_weighted = float((s.age.stems * AGE_LUE_FACTORS).sum() / total)
    return PhysicalParams(
        lai=lai,
        lai_conifer=lai_con,
        lai_deciduous=lai_dec,
        canopy_albedo=albedo,
        canopy_area_fraction=1.0 - math.exp(-p.canopy_extinction * lai),
        interception_efficiency=interception,
        canopy_snow_capacity=p.canopy_snow_capacity_per_lai * lai,
        lue_effective=p.lue_base * lue_weighted,
    )


def end_of_year_demography(s: StandState, p: SiteParameters, rng: RngStream,
                           deterministic: bool = False) -> tuple[StandState, DemographyReport]:
    """Mortality, recruitment, then the annual age-class shift.

    Consumes exactly two draws from the stream whatever happens, so replay
    order is stable. ``deterministic=True`` skips the rate noise but still
    consumes the draws.
    """
    mort_noise = rng.uniform(p.demography_noise_low, p.demography_noise_high)
    rec_noise = rng.uniform(p.demography_noise_low, p.demography_noise_high)
    if deterministic:
        mort_noise = rec_noise = 1.0

    new = s.copy()
    stems = new.age.stems
    report = DemographyReport()
    density = s.density()

    overshoot = max(0.0, density / p.max_natural_density - p.mortality_density_onset)
    rate = min(1.0, p.natural_mortality * mort_noise + p.mortality_density_coeff * overshoot)
    if density > 0.0 and rate > 0.0:
        dead = stems * rate
        report.mortality_stems = float(dead.sum())
        report.mortality_rate = rate
        report.mortality_carbon_fraction = carbon_weighted_fraction(dead, s.age.stems)
        stems -= dead
        _zero_tiny_negatives(stems)

    space = max(0.0, 1.0 - stems.sum() / p.max_natural_density)
    recruits = p.recruitment_rate * p.max_natural_density * space * rec_noise
    if recruits > 0.0:
        cf = new.age.conifer_fraction()
        stems[CONIFER, 0] += recruits * cf
        stems[DECIDUOUS, 0] += recruits * (1.0 - cf)
        report.recruitment_stems = recruits

    # Annual aging: a 1/width share of each class moves up; 'old' accumulates.
    for sp in (CONIFER, DECIDUOUS):
        moved = stems[sp, :4] * TRANSITION_FRACTIONS[:4]
        stems[sp, :4] -= moved
        stems[sp, 1:] += moved

    _zero_tiny_negatives(stems)
    new.age.validate()
    return new, report
