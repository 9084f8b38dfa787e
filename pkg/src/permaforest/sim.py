"""Annual simulation timeline.

Each simulated year runs, in order: (1) management implementation,
(2) physical-parameter update, (3) the sub-annual physics loop, (4)
end-of-year bookkeeping (insect check, demography, aging), (5) metrics
assembly. One Simulator owns one episode; all randomness flows through the
weather and disturbance streams it was given, with a fixed draw budget per
year (1095 weather draws, 369 disturbance draws).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from . import kernel
from .carbon import CarbonLedger, end_of_year_pools
from .disturb import DisturbanceReport, apply_fire_to_stems, insect_check, insect_mortality
from .energy import T_FREEZE
from .errors import PhysicsFault
from .hydro import WaterState
from .params import SiteParameters
from .rng import RngStream
from .stand import (
    AgeDistribution,
    ManagementOutcome,
    StandState,
    apply_management,
    derive_physical_params,
    end_of_year_demography,
)
from .weather import AnnualWeather, generate_annual_weather

VALID_DT_MINUTES = (15, 30, 60, 180)


@dataclass
class AnnualMetrics:
    year: int = 0
    density: float = 0.0
    conifer_fraction: float = 0.0
    biomass_carbon: float = 0.0
    soil_carbon: float = 0.0
    hwp_cumulative: float = 0.0
    net_carbon_change_incl_hwp: float = 0.0
    biomass_change: float = 0.0
    soil_change: float = 0.0
    hwp_stored: float = 0.0
    harvest_loss: float = 0.0
    thinning_removed: float = 0.0
    gpp: float = 0.0
    resp_auto: float = 0.0
    resp_het: float = 0.0
    litterfall: float = 0.0
    mortality_carbon: float = 0.0
    fire_emissions: float = 0.0
    fire_to_soil: float = 0.0
    insect_to_soil: float = 0.0
    f_p: float = 0.0
    f_n: float = 0.0
    max_canopy_residual: float = 0.0
    fire_occurred: bool = False
    fire_day: int = 0
    fire_mortality_fraction: float = 0.0
    insect_occurred: bool = False
    insect_mortality_fraction: float = 0.0
    drought_index: float = 0.0
    mean_winter_temp: float = 0.0
    precip_total: float = 0.0
    et_total: float = 0.0
    runoff_total: float = 0.0
    melt_total: float = 0.0
    swe_max: float = 0.0
    water_closure_residual: float = 0.0
    carbon_closure_residual: float = 0.0
    mortality_stems: float = 0.0
    recruitment_stems: float = 0.0
    stems_removed: float = 0.0
    stems_planted: float = 0.0
    density_delta: float = 0.0
    mix_delta: float = 0.0
    ineffective_thinning: bool = False
    ineffective_planting: bool = False
    action_density_change: float = 0.0
    action_conifer_target: float = 0.0

    def as_dict(self) -> dict:
        return asdict(self)


METRICS_COLUMNS = list(AnnualMetrics().as_dict().keys())


def metrics_to_row(m: AnnualMetrics) -> list:
    """CSV row with full-precision floats (repr round-trips exactly)."""
    row = []
    for key in METRICS_COLUMNS:
        v = getattr(m, key)
        if isinstance(v, (bool, np.bool_)):
            row.append(int(v))
        elif isinstance(v, (float, np.floating)):
            row.append(repr(float(v)))
        else:
            row.append(int(v))
    return row


def initial_stand(p: SiteParameters) -> StandState:
    """Default stand: young/mature-dominated, the configured density and mix."""
    density = p.initial_density
    cf = p.initial_conifer_fraction
    # 40% young, 40% mature, remainder split across the other three classes.
    class_weights = np.array([0.2 / 3.0, 0.2 / 3.0, 0.4, 0.4, 0.2 / 3.0])
    stems = np.zeros((2, 5))
    stems[0] = density * cf * class_weights
    stems[1] = density * (1.0 - cf) * class_weights
    return StandState(
        age=AgeDistribution(stems),
        biomass_carbon=p.initial_biomass_carbon,
        soil_carbon=p.initial_soil_carbon,
    )


class Simulator:
    """One episode's physics state and annual step loop."""

    def __init__(self, p: SiteParameters, stand: StandState, weather_rng: RngStream,
                 disturb_rng: RngStream, dt_minutes: int = 60,
                 deterministic_weather_noise: bool = False):
        if dt_minutes not in VALID_DT_MINUTES:
            raise ValueError(f"dt_minutes must be one of {VALID_DT_MINUTES}")
        self.p = p
        self.stand = stand
        self.weather_rng = weather_rng
        self.disturb_rng = disturb_rng
        self.dt_seconds = dt_minutes * 60.0
        self.steps_per_day = int(round(1440 / dt_minutes))
        self.noise_scale = 0.0 if deterministic_weather_noise else 1.0
        self.water = WaterState(swc=p.initial_swc_fraction * p.max_water_content)
        self.drought_index = 0.0
        # Node temperatures defer to the first generated day's air temperature.
        self.node_state = None
        self.year_index = 0
        self.weather_log = None  # set to a list to capture each year's weather
        for _ in range(int(p.spin_up_years)):
            self._spin_up_year()

    # -- state helpers -------------------------------------------------------

    def _init_nodes(self, weather: AnnualWeather) -> np.ndarray:
        t0 = 273.15 + float(weather.mean_temp[0])
        t0 = min(max(t0, 200.0), 320.0)
        return np.array([
            t0,                                    # trunk
            min(t0, T_FREEZE),                     # snow
            t0,                                    # surface soil
            self.p.deep_boundary_temp + 1.0,       # deep soil
            t0,                                    # canopy guess
            self.water.swe_ground,
            self.water.swe_canopy,
            self.water.swc,
        ])

    def _state_vector(self) -> np.ndarray:
        s = self.node_state.copy()
        s[5] = self.water.swe_ground
        s[6] = self.water.swe_canopy
        s[7] = self.water.swc
        return s

    def _run_kernel(self, weather: AnnualWeather, fire_u, fire_sev_u,
                    trace: np.ndarray | None = None):
        pp = derive_physical_params(self.stand, self.p, 1.0)
        pot_total = pp.lai_conifer + pp.lai_deciduous
        w_con = pp.lai_conifer / pot_total if pot_total > 0.0 else 0.0
        k = kernel.pack_kernel_params(
            self.p, pp.lai_conifer, pp.lai_deciduous, w_con, pp.lue_effective,
            self.stand.conifer_fraction(), self.stand.biomass_carbon,
            self.stand.soil_carbon, self.dt_seconds, self.steps_per_day)
        trace_on = trace is not None
        trace_arr = trace if trace_on else np.zeros((1, len(kernel.TRACE_COLUMNS)))
        out = kernel.run_year(k, weather.mean_temp, weather.amplitude, weather.precip,
                              weather.is_snow, fire_u, fire_sev_u, self._state_vector(),
                              self.drought_index, trace_on, trace_arr)
        if out[kernel.R_FAULT] != 0.0:
            raise PhysicsFault(
                "simulator fault in the physics loop",
                kind=("node clamp" if out[kernel.R_FAULT] == 1.0 else "canopy no-root"),
                year=self.year_index, day=int(out[kernel.R_FAULT_DAY]),
                step=int(out[kernel.R_FAULT_STEP]))
        return out

    def _absorb_kernel_state(self, out: np.ndarray):
        self.node_state[0] = out[kernel.R_T_TRUNK]
        self.node_state[1] = out[kernel.R_T_SNOW]
        self.node_state[2] = out[kernel.R_T_SURF]
        self.node_state[3] = out[kernel.R_T_DEEP]
        self.node_state[4] = out[kernel.R_T_CAN]
        self.water.swe_ground = out[kernel.R_SWE_GROUND]
        self.water.swe_canopy = out[kernel.R_SWE_CANOPY]
        self.water.swc = out[kernel.R_SWC]

    def _spin_up_year(self):
        """Physics-only year: equilibrates temperatures and water, no
        management, disturbance effects, or pool updates."""
        weather = generate_annual_weather(self.p, self.weather_rng, self.noise_scale)
        fire_u = self.disturb_rng.uniform(size=365)
        fire_sev_u = self.disturb_rng.uniform()
        self.disturb_rng.uniform()  # insect slot
        self.disturb_rng.uniform(size=2)  # demography slots
        if self.node_state is None:
            self.node_state = self._init_nodes(weather)
        out = self._run_kernel(weather, fire_u, fire_sev_u)
        self._absorb_kernel_state(out)
        self.drought_index = out[kernel.R_DROUGHT] * self.p.drought_carryover

    # -- the annual step ------------------------------------------------------

    def simulate_year(self, density_change: float, conifer_target: float,
                      trace: np.ndarray | None = None) -> tuple[AnnualMetrics, ManagementOutcome]:
        """Run one management year; mutates the held stand and returns the
        metrics record consumed by reward shaping."""
        stores_before = self.water.stores()

        # 1. management implementation
        self.stand, outcome = apply_management(
            self.stand, density_change, conifer_target, self.p)
        biomass_start = self.stand.biomass_carbon
        soil_start = self.stand.soil_carbon

        # 2-3. parameter update + sub-annual physics loop
        weather = generate_annual_weather(self.p, self.weather_rng, self.noise_scale)
        if self.weather_log is not None:
            self.weather_log.append(weather)
        fire_u = self.disturb_rng.uniform(size=365)
        fire_sev_u = self.disturb_rng.uniform()
        if self.node_state is None:
            self.node_state = self._init_nodes(weather)
        out = self._run_kernel(weather, fire_u, fire_sev_u, trace)
        self._absorb_kernel_state(out)
        precip_in = out[kernel.R_PRECIP]
        et_total = out[kernel.R_ET]
        runoff_total = out[kernel.R_RUNOFF]

        # 4. end-of-year bookkeeping: fire stems, insect check, demography, aging
        disturbance = DisturbanceReport()
        fire_day = int(out[kernel.R_FIRE_DAY])
        if fire_day > 0:
            disturbance.fire_occurred = True
            disturbance.fire_day = fire_day
            disturbance.fire_mortality_fraction = float(out[kernel.R_FIRE_SEVERITY])
            disturbance.fire_carbon_fraction = disturbance.fire_mortality_fraction
            self.stand.age.stems = apply_fire_to_stems(
                self.stand.age.stems, disturbance.fire_mortality_fraction)

        mean_winter = weather.mean_winter_temp()
        insect = insect_check(self.stand, self.p, mean_winter, self.disturb_rng)
        if insect.insect_occurred:
            disturbance.insect_occurred = True
            new_stems, stem_frac, carbon_frac = insect_mortality(
                self.stand.age.stems, self.p.insect_mortality_rate,
                self.p.insect_deciduous_bias)
            self.stand.age.stems = new_stems
            disturbance.insect_mortality_fraction = stem_frac
            disturbance.insect_carbon_fraction = carbon_frac

        self.stand, demog = end_of_year_demography(self.stand, self.p, self.disturb_rng)

        # 5. pools and metrics
        ledger = CarbonLedger(
            gpp_annual=out[kernel.R_GPP_KG],
            resp_auto_annual=out[kernel.R_RA_KG],
            resp_het_annual=out[kernel.R_RH_KG],
            thinning_removed=outcome.removed_carbon,
            hwp_stored=outcome.hwp_stored,
            harvest_loss=outcome.harvest_loss,
        )
        ledger = end_of_year_pools(
            biomass_start, soil_start, ledger, self.p.litterfall_fraction,
            disturbance.fire_carbon_fraction, self.p.fire_combust_fraction,
            disturbance.insect_carbon_fraction, demog.mortality_carbon_fraction)
        disturbance.fire_carbon_combusted = ledger.fire_emissions
        disturbance.insect_carbon_to_soil = ledger.insect_to_soil
        self.stand.biomass_carbon = ledger.biomass_carbon
        self.stand.soil_carbon = ledger.soil_carbon
        self.stand.year += 1
        self.year_index += 1

        drought_final = out[kernel.R_DROUGHT]
        self.drought_index = drought_final * self.p.drought_carryover

        water_residual = precip_in - ((self.water.stores() - stores_before)
                                      + et_total + runoff_total)
        scale = max(1.0, precip_in)
        metrics = AnnualMetrics(
            year=self.stand.year,
            density=self.stand.density(),
            conifer_fraction=self.stand.conifer_fraction(),
            biomass_carbon=self.stand.biomass_carbon,
            soil_carbon=self.stand.soil_carbon,
            hwp_cumulative=self.stand.hwp_carbon_cumulative,
            net_carbon_change_incl_hwp=ledger.net_carbon_change,
            biomass_change=ledger.biomass_change,
            soil_change=ledger.soil_change,
            hwp_stored=ledger.hwp_stored,
            harvest_loss=ledger.harvest_loss,
            thinning_removed=ledger.thinning_removed,
            gpp=ledger.gpp_annual,
            resp_auto=ledger.resp_auto_annual,
            resp_het=ledger.resp_het_annual,
            litterfall=ledger.litterfall_annual,
            mortality_carbon=ledger.mortality_to_soil,
            fire_emissions=ledger.fire_emissions,
            fire_to_soil=ledger.fire_to_soil,
            insect_to_soil=ledger.insect_to_soil,
            f_p=float(out[kernel.R_F_P]),
            f_n=float(out[kernel.R_F_N]),
            max_canopy_residual=float(out[kernel.R_MAX_RESIDUAL]),
            fire_occurred=disturbance.fire_occurred,
            fire_day=disturbance.fire_day,
            fire_mortality_fraction=float(disturbance.fire_mortality_fraction),
            insect_occurred=disturbance.insect_occurred,
            insect_mortality_fraction=disturbance.insect_mortality_fraction,
            drought_index=float(drought_final),
            mean_winter_temp=mean_winter,
            precip_total=float(precip_in),
            et_total=float(et_total),
            runoff_total=float(runoff_total),
            melt_total=float(out[kernel.R_MELT]),
            swe_max=float(out[kernel.R_SWE_MAX]),
            water_closure_residual=float(water_residual / scale),
            carbon_closure_residual=ledger.closure_residual(),
            mortality_stems=demog.mortality_stems,
            recruitment_stems=demog.recruitment_stems,
            stems_removed=outcome.stems_removed,
            stems_planted=outcome.stems_planted,
            density_delta=outcome.density_delta,
            mix_delta=outcome.mix_delta,
            ineffective_thinning=outcome.ineffective_thinning,
            ineffective_planting=outcome.ineffective_planting,
            action_density_change=density_change,
            action_conifer_target=conifer_target,
        )
        return metrics, outcome

    def trace_buffer(self) -> np.ndarray:
        """Pre-sized per-timestep trace array for one year."""
        return np.zeros((365 * self.steps_per_day, len(kernel.TRACE_COLUMNS)))

    def snapshot(self) -> str:
        return json.dumps({
            "stand": json.loads(self.stand.to_json()),
            "water": asdict(self.water),
            "drought_index": self.drought_index,
            "node_state": None if self.node_state is None else self.node_state.tolist(),
            "year_index": self.year_index,
        })
