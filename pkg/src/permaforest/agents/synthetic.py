"""Synthetic environments for fast algorithm sanity checks.

These mirror the forest environment's interface (reset/step/action_mask)
without any physics, so learning machinery can be validated in seconds.
"""

from __future__ import annotations

import numpy as np

from ..env import N_ACTIONS, OBS_DIM_SITE


class DegeneratePlantingEnv:
    """Pays +1 carbon reward for any planting action (indices 15-24), zero
    otherwise. A policy-gradient agent should saturate planting frequency."""

    def __init__(self, horizon: int = 50, seed: int = 0):
        self.horizon = horizon
        self.observation_dim = OBS_DIM_SITE
        self.n_actions = N_ACTIONS
        self._gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
        self.t = 0
        self.episode_index = -1

    def _obs(self) -> np.ndarray:
        obs = np.zeros(self.observation_dim)
        obs[0] = 1.0
        obs[1] = self.t / self.horizon
        obs[2:6] = self._gen.random(4) * 0.1
        return obs

    def action_mask(self) -> np.ndarray:
        return np.ones(self.n_actions, dtype=bool)

    def reset(self, episode_seed=None):
        self.t = 0
        self.episode_index += 1
        return self._obs(), {"action_mask": self.action_mask(), "w_carbon": 1.0,
                             "episode": self.episode_index}

    def step(self, action_index: int):
        self.t += 1
        r = 1.0 if 15 <= int(action_index) <= 24 else 0.0
        reward = np.array([r, 0.0])
        terminated = self.t >= self.horizon
        return self._obs(), reward, terminated, False, {
            "action_mask": self.action_mask(), "w_carbon": 1.0}


class TwoClusterSiteEnv:
    """Generalist-like env whose 62-slot site context falls in one of two
    clusters; the bad cluster yields a deterministic episode return of -1,
    the good cluster +1, independent of actions. Exists to test curriculum
    episode selection."""

    GOOD_CENTER = 0.75
    BAD_CENTER = 0.25

    def __init__(self, horizon: int = 10, seed: int = 0):
        self.horizon = horizon
        self.observation_dim = OBS_DIM_SITE + 62
        self.n_actions = N_ACTIONS
        self.seed = seed
        self.t = 0
        self.episode_index = -1
        self.is_bad = False

    def action_mask(self) -> np.ndarray:
        return np.ones(self.n_actions, dtype=bool)

    def _obs(self) -> np.ndarray:
        obs = np.zeros(self.observation_dim)
        obs[0] = 1.0
        obs[1] = self.t / self.horizon
        obs[43:] = self._site
        return obs

    def reset(self, episode_seed=None):
        if episode_seed is not None:
            self.episode_index = int(episode_seed)
        else:
            self.episode_index += 1
        gen = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(entropy=self.seed, spawn_key=(self.episode_index,))))
        self.is_bad = gen.random() < 0.5
        center = self.BAD_CENTER if self.is_bad else self.GOOD_CENTER
        self._site = np.clip(center + 0.05 * gen.standard_normal(62), 0.0, 1.0)
        self.t = 0
        return self._obs(), {"action_mask": self.action_mask(), "w_carbon": 1.0,
                             "episode": self.episode_index, "is_bad": self.is_bad}

    def step(self, action_index: int):
        self.t += 1
        r = (-1.0 if self.is_bad else 1.0) / self.horizon
        terminated = self.t >= self.horizon
        return self._obs(), np.array([r, 0.0]), terminated, False, {
            "action_mask": self.action_mask(), "w_carbon": 1.0, "is_bad": self.is_bad}
