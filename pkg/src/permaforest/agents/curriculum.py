"""Curriculum episode selection on top of the gated PPO trainer.

A small selection network scores each freshly sampled episode from the
site-context slice of the observation; the episode is trained on only when
the score clears an adaptive threshold. Skipped episodes consume no policy
steps (episode seeds are tied to the episode index, so skipping never shifts
the randomness of accepted episodes). The selector regresses toward the
min-max-normalized realized scalarized return of completed episodes, and the
threshold adapts to hold the acceptance rate inside a target band, with an
anti-deadlock rule that lowers it after a fully rejected window.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from ..config import parse_hidden
from ..nnet import Adam, Mlp, MlpSpec
from .ppo import PpoTrainer

SITE_SLICE_START = 43


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


class CurriculumPpoTrainer(PpoTrainer):
    def __init__(self, env, cfg: dict, seed: int | None = None):
        super().__init__(env, cfg, seed=seed, gated=True)
        if env.observation_dim <= SITE_SLICE_START:
            raise ValueError("curriculum selection needs the generalist site context")
        train_seed = int(cfg["train_seed"]) if seed is None else int(seed)
        hidden = tuple(parse_hidden(cfg["curriculum_selector_hidden"]))
        self.selector = Mlp(MlpSpec(
            input_dim=env.observation_dim - SITE_SLICE_START,
            hidden=hidden,
            heads={"score": 1},
            seed=train_seed + 100,
        ))
        self.selector_optimizer = Adam(self.selector.n_params())
        self.selector_lr = float(cfg["curriculum_selector_lr"])
        self.threshold = float(cfg["curriculum_threshold"])
        self.accept_low = float(cfg["curriculum_accept_low"])
        self.accept_high = float(cfg["curriculum_accept_high"])
        self.threshold_step = float(cfg["curriculum_threshold_step"])
        self.window = int(cfg["curriculum_window"])
        self.decisions = deque(maxlen=self.window)
        self.decision_count = 0
        self.skipped_episodes = 0
        # (site-context, realized scalarized return) pairs from completed episodes
        self.replay_sites: deque = deque(maxlen=256)
        self._pending_site = None
        self.always_accept = False  # frozen-selector limit == plain gated PPO

    def score_site(self, obs: np.ndarray) -> float:
        logit = self.selector.forward(obs[SITE_SLICE_START:])["score"]
        return float(_sigmoid(logit[0]))

    def acceptance_rate(self) -> float:
        if not self.decisions:
            return 1.0
        return float(np.mean(self.decisions))

    def _adapt_threshold(self):
        if self.decision_count % self.window != 0:
            return
        rate = self.acceptance_rate()
        if rate == 0.0:
            # anti-deadlock: a fully rejected window force-lowers the bar
            self.threshold = max(0.05, self.threshold - 5.0 * self.threshold_step)
        elif rate > self.accept_high:
            self.threshold = min(0.95, self.threshold + self.threshold_step)
        elif rate < self.accept_low:
            self.threshold = max(0.05, self.threshold - self.threshold_step)

    def _reset_env(self):
        while True:
            obs, info = self.env.reset()
            if self.always_accept:
                self._pending_site = obs[SITE_SLICE_START:].copy()
                return obs, info
            score = self.score_site(obs)
            accept = score >= self.threshold
            self.decisions.append(1.0 if accept else 0.0)
            self.decision_count += 1
            self._adapt_threshold()
            if accept:
                self._pending_site = obs[SITE_SLICE_START:].copy()
                return obs, info
            self.skipped_episodes += 1

    def _on_episode_complete(self, scalarized_return: float):
        if self._pending_site is not None:
            self.replay_sites.append((self._pending_site, scalarized_return))
            self._pending_site = None
        self._train_selector()

    def _train_selector(self, steps: int = 5):
        if len(self.replay_sites) < 4:
            return
        sites = np.asarray([s for s, _ in self.replay_sites])
        rets = np.asarray([r for _, r in self.replay_sites])
        lo, hi = rets.min(), rets.max()
        targets = (rets - lo) / (hi - lo) if hi > lo else np.full_like(rets, 0.5)
        for _ in range(steps):
            logits = self.selector.forward(sites)["score"][:, 0]
            scores = _sigmoid(logits)
            # MSE through the sigmoid
            dlogit = (scores - targets) * scores * (1.0 - scores) / len(scores)
            tape = self.selector.backward({"score": dlogit[:, None]})
            self.selector.set_flat(self.selector_optimizer.step(
                tape.params, tape.grads, self.selector_lr))
