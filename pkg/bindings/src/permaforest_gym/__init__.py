"""Multi-objective gym-style binding for the forest management environment.

The wrapper marshals arrays across the boundary and nothing else: every
number it returns is produced by the core package. ``reset(seed=k)`` selects
episode index ``k``, so a seeded binding rollout reproduces the native CLI's
rollout for the same configuration field for field.
"""

from __future__ import annotations

from dataclasses import asdict

import numpy as np

from permaforest.env import (
    N_ACTIONS,
    OBS_DIM_GENERALIST,
    OBS_DIM_SITE,
    ForestEnv,
)

from .spaces import Box, Discrete

__version__ = "0.1.0"
__all__ = ["ForestManagementEnv", "make_env", "register_env", "make", "registry"]

DEFAULT_ENV_ID = "PermaforestManagement-v0"


def _observation_bounds(generalist: bool):
    """Per-entry bounds mirroring the observation table's normalizations.

    Entries with a hard normalized range get it exactly; physically
    open-ended entries (carbon pools, drought index, flux history) are
    half- or fully unbounded.
    """
    dim = OBS_DIM_GENERALIST if generalist else OBS_DIM_SITE
    low = np.zeros(dim)
    high = np.ones(dim)
    inf = np.inf
    high[2] = 2000.0 / 1500.0                      # density capped at 2000
    for i in (4, 15, 16, 20, 21, 23, 38, 39, 40, 41):
        high[i] = inf                              # pools/index not hard-capped
    for i in (17, 18, 19):                         # signed carbon changes
        low[i], high[i] = -inf, inf
    low[22], high[22] = 0.5, inf                   # (loss >= 0 + 0.5) / 1
    low[27], high[27] = -1.0, 1.0                  # mix change
    low[5], high[5] = (56.0 - 50.0) / 20.0, (65.0 - 50.0) / 20.0
    low[6], high[6] = 0.0, 0.25
    low[7], high[7] = 20.0 / 30.0, 25.0 / 30.0
    low[8], high[8] = 130.0 / 365.0, 150.0 / 365.0
    low[9], high[9] = 260.0 / 365.0, 280.0 / 365.0
    low[10], high[10] = (260.0 - 150.0) / 200.0, (280.0 - 130.0) / 200.0
    # slots 43+ (generalist site context) are normalized to [0, 1] already
    return low, high


class ForestManagementEnv:
    """reset/step-compatible wrapper with vector rewards.

    * observation_space: Box of shape (43,) or (105,) per mode
    * action_space: Discrete(25)
    * reward_space: Box of shape (2,); the thaw component lies in [-1, 1],
      the carbon component is clipped above at 1 but penalties can push it
      below -1.
    """

    metadata = {"render_modes": []}

    def __init__(self, mode: str = "generalist", **config_overrides):
        self._env = ForestEnv(mode=mode, **config_overrides)
        generalist = mode == "generalist"
        low, high = _observation_bounds(generalist)
        self.observation_space = Box(low=low, high=high)
        self.action_space = Discrete(N_ACTIONS)
        self.reward_space = Box(low=np.array([-np.inf, -1.0]),
                                high=np.array([1.0, 1.0]))
        self.spec_id = DEFAULT_ENV_ID

    @property
    def unwrapped(self):
        return self._env

    def action_mask(self) -> np.ndarray:
        return self._env.action_mask()

    def reset(self, *, seed: int | None = None, options: dict | None = None):
        episode = seed
        if options and "episode" in options:
            episode = int(options["episode"])
        obs, info = self._env.reset(episode_seed=episode)
        return obs, info

    def step(self, action):
        if not self.action_space.contains(action):
            raise ValueError(f"action {action!r} outside Discrete({N_ACTIONS})")
        obs, reward, terminated, truncated, info = self._env.step(int(action))
        info = dict(info)
        metrics = info.pop("metrics", None)
        if metrics is not None:
            info["metrics"] = asdict(metrics)
        return obs, np.asarray(reward, dtype=np.float64), bool(terminated), bool(truncated), info

    def close(self):
        pass


def make_env(mode: str = "generalist", **config_overrides) -> ForestManagementEnv:
    """Construct a wrapped environment; unknown override keys raise with the
    key named (out of the core config registry)."""
    return ForestManagementEnv(mode=mode, **config_overrides)


registry: dict[str, dict] = {}


def register_env(env_id: str = DEFAULT_ENV_ID, **default_kwargs) -> None:
    """Idempotent registration: re-registering the same id is a no-op."""
    if env_id in registry and registry[env_id] == default_kwargs:
        return
    registry[env_id] = default_kwargs


def make(env_id: str, **kwargs) -> ForestManagementEnv:
    if env_id not in registry:
        raise KeyError(f"unknown environment id {env_id!r}; "
                       f"registered: {sorted(registry)}")
    merged = {**registry[env_id], **kwargs}
    return make_env(**merged)


register_env(DEFAULT_ENV_ID)
