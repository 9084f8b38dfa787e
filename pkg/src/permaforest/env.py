"""Two-objective management environment over the forest simulator.

Observation, action, and reward contracts:

* 25 discrete actions = 5 density changes x 5 conifer-fraction targets,
  index = 5 * density_slot + mix_slot.
* Observation: 43 entries in site-specific mode; generalist mode appends the
  62-slot normalized site-parameter context (105 total). Index 0 is the
  carbon preference weight.
* Reward vector [r_carbon, r_thaw]: normalized net carbon change (HWP
  included) minus limit/density/ineffective-action penalties, and the
  asymmetric permafrost flux reward clip((f_n - 5 f_p) / 40, -1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import apply_overrides, default_config, site_overrides
from .errors import ContractViolation
from .params import (
    N_SLOTS,
    SiteParameters,
    fixed_site_parameters,
    normalize_site_parameters,
    sample_site_parameters,
)
from .rng import RngStream
from .sim import AnnualMetrics, Simulator, initial_stand
from .stand import ManagementOutcome, StandState

DENSITY_ACTIONS = (-100.0, -50.0, 0.0, 50.0, 100.0)
MIX_ACTIONS = (0.0, 0.25, 0.5, 0.75, 1.0)
N_ACTIONS = 25
OBS_DIM_SITE = 43
OBS_DIM_GENERALIST = OBS_DIM_SITE + N_SLOTS
PREFERENCE_GRID = tuple(np.linspace(0.0, 1.0, 11))

NOOP_ACTION = 12            # (0, 0.5)
PLANT_BASELINE_ACTION = 22  # (+100, 0.5)


@dataclass
class ActionPair:
    density_change: float
    conifer_target: float


def decode_action(index: int) -> ActionPair:
    """index -> (density change, conifer target); integer division picks the
    density slot, modulo picks the mix slot."""
    if not isinstance(index, (int, np.integer)) or not (0 <= int(index) <= 24):
        raise ContractViolation(f"action index must be an integer in [0, 24], got {index!r}")
    i = int(index)
    return ActionPair(DENSITY_ACTIONS[i // 5], MIX_ACTIONS[i % 5])


def encode_action(density_change: float, conifer_target: float) -> int:
    try:
        d = DENSITY_ACTIONS.index(float(density_change))
        m = MIX_ACTIONS.index(float(conifer_target))
    except ValueError:
        raise ContractViolation(
            f"({density_change}, {conifer_target}) is not a valid action pair")
    return 5 * d + m


@dataclass
class RewardVector:
    r_carbon: float
    r_thaw: float

    def as_array(self) -> np.ndarray:
        return np.array([self.r_carbon, self.r_thaw], dtype=np.float64)

    def scalarize(self, w_carbon: float) -> float:
        return w_carbon * self.r_carbon + (1.0 - w_carbon) * self.r_thaw


@dataclass
class PenaltyInfo:
    p_biomass: float = 0.0
    p_soil: float = 0.0
    p_density: float = 0.0
    p_ineffective: float = 0.0


@dataclass
class EpisodeConfig:
    mode: str = "generalist"              # generalist | site_specific
    horizon: int = 50
    dt_minutes: int = 60
    preference_mode: str = "sampled"      # fixed | sampled
    fixed_lambda: float = 1.0
    site_seed: int = 1
    weather_seed: int = 1
    disturbance_seed: int = 1
    preference_seed: int = 1
    overrides: dict = field(default_factory=dict)

    @staticmethod
    def from_config(cfg: dict) -> "EpisodeConfig":
        return EpisodeConfig(
            mode=cfg["mode"],
            horizon=int(cfg["episode_length"]),
            dt_minutes=int(cfg["dt_minutes"]),
            preference_mode=cfg["preference_mode"],
            fixed_lambda=float(cfg["fixed_lambda"]),
            site_seed=int(cfg["site_seed"]),
            weather_seed=int(cfg["weather_seed"]),
            disturbance_seed=int(cfg["disturbance_seed"]),
            preference_seed=int(cfg["preference_seed"]),
            overrides=site_overrides(cfg),
        )


@dataclass
class _History:
    """Rolling buffers behind the observation's history categories.

    All raw values start at zero; the table's affine maps are applied at
    observation-build time, so e.g. the fresh-episode density-change entry
    reads (0 + 100) / 200 = 0.5.
    """

    fire: list = field(default_factory=lambda: [0.0, 0.0])
    insect: list = field(default_factory=lambda: [0.0, 0.0])
    drought: list = field(default_factory=lambda: [0.0, 0.0])
    biomass_change: float = 0.0
    soil_change: float = 0.0
    total_change: float = 0.0
    mortality_carbon: float = 0.0
    litterfall: float = 0.0
    harvest_loss: float = 0.0
    hwp_stored: float = 0.0
    density_action_slot: float = 0.0
    mix_action_slot: float = 0.0
    density_delta: float = 0.0
    mix_delta: float = 0.0
    p_biomass: float = 0.0
    p_soil: float = 0.0
    p_density: float = 0.0

    def push(self, m: AnnualMetrics, action_index: int, penalties: PenaltyInfo):
        self.fire = [m.fire_mortality_fraction if m.fire_occurred else 0.0, self.fire[0]]
        self.insect = [m.insect_mortality_fraction if m.insect_occurred else 0.0,
                       self.insect[0]]
        self.drought = [m.drought_index, self.drought[0]]
        self.biomass_change = m.biomass_change
        self.soil_change = m.soil_change
        self.total_change = m.net_carbon_change_incl_hwp
        self.mortality_carbon = m.mortality_carbon
        self.litterfall = m.litterfall
        self.harvest_loss = m.harvest_loss
        self.hwp_stored = m.hwp_stored
        self.density_action_slot = float(action_index // 5)
        self.mix_action_slot = float(action_index % 5)
        self.density_delta = m.density_delta
        self.mix_delta = m.mix_delta
        self.p_biomass = penalties.p_biomass
        self.p_soil = penalties.p_soil
        self.p_density = penalties.p_density


def build_observation(stand: StandState, p: SiteParameters, history: _History,
                      w_carbon: float, mode: str, horizon: int = 50) -> np.ndarray:
    """Assemble the observation vector in table order."""
    generalist = mode == "generalist"
    obs = np.zeros(OBS_DIM_GENERALIST if generalist else OBS_DIM_SITE)
    obs[0] = w_carbon
    obs[1] = stand.year / horizon
    obs[2] = stand.density() / 1500.0
    obs[3] = stand.conifer_fraction()
    obs[4] = (stand.biomass_carbon + stand.soil_carbon) / 50.0
    obs[5] = (p.latitude - 50.0) / 20.0
    obs[6] = (p.mean_annual_temp_offset + 10.0) / 20.0
    obs[7] = p.seasonal_amplitude / 30.0
    obs[8] = p.growth_start_day / 365.0
    obs[9] = p.fall_start_day / 365.0
    obs[10] = (p.fall_start_day - p.growth_start_day) / 200.0
    obs[11] = history.fire[0]
    obs[12] = history.fire[1]
    obs[13] = history.insect[0]
    obs[14] = history.insect[1]
    obs[15] = history.drought[0] / 100.0
    obs[16] = history.drought[1] / 100.0
    obs[17] = (history.biomass_change + 0.5) / 1.0
    obs[18] = (history.soil_change + 0.2) / 0.4
    obs[19] = (history.total_change + 0.7) / 1.4
    obs[20] = history.mortality_carbon / 0.5
    obs[21] = history.litterfall / 2.0
    obs[22] = (history.harvest_loss + 0.5) / 1.0
    obs[23] = history.hwp_stored / 0.5
    obs[24] = history.density_action_slot / 4.0
    obs[25] = history.mix_action_slot / 4.0
    obs[26] = (history.density_delta + 100.0) / 200.0
    obs[27] = history.mix_delta
    fractions = stand.age.class_fractions()
    obs[28:33] = fractions[0]
    obs[33:38] = fractions[1]
    obs[38] = stand.biomass_carbon / 50.0
    obs[39] = stand.soil_carbon / 50.0
    obs[40] = history.p_biomass / 0.5
    obs[41] = history.p_soil / 0.5
    obs[42] = history.p_density / 1.0
    if generalist:
        obs[43:] = normalize_site_parameters(p)
    return obs


def compute_reward(m: AnnualMetrics, cfg: dict) -> tuple[RewardVector, PenaltyInfo]:
    """Reward shaping from the year's metrics.

    The carbon term clips only the normalized net change; penalties stack on
    top unclipped. Bonuses ship disabled (multiplier 0.0) but stay in the
    formula so config can re-enable them.
    """
    c_n = float(np.clip(m.net_carbon_change_incl_hwp / cfg["max_carbon_change"], -1.0, 1.0))
    total_stock = m.biomass_carbon + m.soil_carbon
    s_b = cfg["stock_bonus_multiplier"] * float(np.clip(total_stock / cfg["max_total_carbon"], 0.0, 1.0))
    h_b = cfg["hwp_sale_reward_multiplier"] * float(np.clip(m.hwp_stored / cfg["max_hwp_sales"], 0.0, 1.0))

    excess_b = max(0.0, m.biomass_carbon - cfg["biomass_carbon_limit"])
    excess_s = max(0.0, m.soil_carbon - cfg["soil_carbon_limit"])
    pen = PenaltyInfo(
        p_biomass=excess_b / cfg["biomass_carbon_limit"] * cfg["carbon_limit_penalty"],
        p_soil=excess_s / cfg["soil_carbon_limit"] * cfg["carbon_limit_penalty"],
        p_density=cfg["max_density_penalty"] if m.density >= cfg["max_density"] else 0.0,
        p_ineffective=(cfg["ineffective_thinning_penalty"] * m.ineffective_thinning
                       + cfg["ineffective_planting_penalty"] * m.ineffective_planting),
    )
    r_carbon = (c_n + s_b + h_b - (pen.p_biomass + pen.p_soil)
                - pen.p_density - pen.p_ineffective)

    a_t = m.f_n - cfg["warming_penalty_factor"] * m.f_p
    r_thaw = float(np.clip(a_t / cfg["max_thaw_degree_days"], -1.0, 1.0))
    return RewardVector(r_carbon, r_thaw), pen


class ForestEnv:
    """Episode runner. One instance owns one episode at a time; episode k is
    fully reconstructible from (base seeds, k)."""

    def __init__(self, cfg: dict | None = None, **override_keys):
        base = default_config()
        if cfg:
            base.update(cfg)
        if override_keys:
            base = apply_overrides(base, override_keys)
        self.cfg = base
        self.episode_cfg = EpisodeConfig.from_config(base)
        self.episode_index = -1
        self.sim: Simulator | None = None
        self.params: SiteParameters | None = None
        self.history = _History()
        self.w_carbon = self.episode_cfg.fixed_lambda
        self.done = True

    # -- episode wiring -------------------------------------------------------

    @property
    def observation_dim(self) -> int:
        return OBS_DIM_GENERALIST if self.episode_cfg.mode == "generalist" else OBS_DIM_SITE

    @property
    def n_actions(self) -> int:
        return N_ACTIONS

    def _make_streams(self, episode: int) -> tuple[RngStream, RngStream, RngStream, RngStream]:
        ec = self.episode_cfg
        if ec.mode == "site_specific":
            # Fixed weather/disturbance seeds: every episode is the same MDP.
            weather = RngStream(ec.weather_seed, stream="weather", episode=0)
            disturb = RngStream(ec.disturbance_seed, stream="disturbance", episode=0)
            param = RngStream(ec.site_seed, stream="parameters", episode=0)
        else:
            weather = RngStream(ec.weather_seed, stream="weather", episode=episode)
            disturb = RngStream(ec.disturbance_seed, stream="disturbance", episode=episode)
            param = RngStream(ec.site_seed, stream="parameters", episode=episode)
        pref = RngStream(ec.preference_seed, stream="preference", episode=episode)
        return weather, disturb, param, pref

    def reset(self, episode_seed: int | None = None) -> tuple[np.ndarray, dict]:
        """Start an episode. ``episode_seed`` overrides the internal episode
        counter (used by replay to reconstruct episode k exactly)."""
        ec = self.episode_cfg
        if episode_seed is not None:
            self.episode_index = int(episode_seed)
        else:
            self.episode_index += 1
        episode = self.episode_index
        weather, disturb, param, pref = self._make_streams(episode)

        if ec.mode == "site_specific":
            self.params = fixed_site_parameters(ec.site_seed, ec.overrides)
            stand = initial_stand(self.params)
        else:
            self.params = sample_site_parameters(param, ec.overrides)
            stand = initial_stand(self.params)
            jitter = self.params.initial_pool_jitter
            stand.biomass_carbon *= 1.0 + jitter * (2.0 * param.uniform() - 1.0)
            stand.soil_carbon *= 1.0 + jitter * (2.0 * param.uniform() - 1.0)

        if ec.preference_mode == "fixed":
            self.w_carbon = ec.fixed_lambda
        else:
            self.w_carbon = PREFERENCE_GRID[pref.integers(0, len(PREFERENCE_GRID))]

        self.sim = Simulator(
            self.params, stand, weather, disturb, dt_minutes=ec.dt_minutes,
            deterministic_weather_noise=(ec.mode == "site_specific"))
        self.history = _History()
        self.done = False
        obs = build_observation(self.sim.stand, self.params, self.history,
                                self.w_carbon, ec.mode, ec.horizon)
        info = {
            "episode": episode,
            "mode": ec.mode,
            "w_carbon": self.w_carbon,
            "action_mask": self.action_mask(),
            "seeds": {
                "site": ec.site_seed, "weather": ec.weather_seed,
                "disturbance": ec.disturbance_seed, "preference": ec.preference_seed,
            },
        }
        return obs, info

    def action_mask(self) -> np.ndarray:
        """True = selectable. Planting is masked at the density cap, thinning
        at the density floor; the no-op block is never masked."""
        mask = np.ones(N_ACTIONS, dtype=bool)
        density = self.sim.stand.density() if self.sim is not None else 0.0
        if density >= self.cfg["max_density"]:
            mask[15:25] = False
        if density <= self.cfg["safe_min_density"]:
            mask[0:10] = False
        return mask

    def step(self, action_index: int):
        if self.done or self.sim is None:
            raise ContractViolation("step() called on a finished episode; call reset()")
        action = decode_action(action_index)
        metrics, outcome = self.sim.simulate_year(action.density_change, action.conifer_target)
        reward, penalties = compute_reward(metrics, self.cfg)
        self.history.push(metrics, int(action_index), penalties)
        terminated = self.sim.stand.year >= self.episode_cfg.horizon
        self.done = terminated
        obs = build_observation(self.sim.stand, self.params, self.history,
                                self.w_carbon, self.episode_cfg.mode,
                                self.episode_cfg.horizon)
        info = {
            "metrics": metrics,
            "penalties": penalties,
            "action": (action.density_change, action.conifer_target),
            "action_mask": self.action_mask(),
            "w_carbon": self.w_carbon,
            "episode": self.episode_index,
        }
        return obs, reward.as_array(), terminated, False, info
