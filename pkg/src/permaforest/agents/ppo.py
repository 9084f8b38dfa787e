"""Clipped-surrogate policy optimization with invalid-action gating.

The policy has separate linear heads for non-planting actions (indices 0-14)
and planting actions (15-24); the concatenated logits are masked before the
softmax so invalid actions carry exactly zero probability (planting at the
density cap, thinning at the density floor). Advantages come from
generalized advantage estimation over rollouts that span episode boundaries.
"""

from __future__ import annotations

import numpy as np

from ..config import parse_hidden
from ..errors import ContractViolation
from ..nnet import Adam, Mlp, MlpSpec, masked_log_softmax, softmax_probs
from .common import (
    ActionSampler,
    EpisodeLog,
    TrainRecord,
    categorical_pg_grad,
    entropy_and_grad,
    gae_advantages,
    global_norm_clip,
    scalarize,
)

N_NONPLANT = 15
N_PLANT = 10


class PpoTrainer:
    def __init__(self, env, cfg: dict, seed: int | None = None, gated: bool = True):
        self.env = env
        self.cfg = cfg
        self.gated = gated
        self.gamma = float(cfg["ppo_gamma"])
        self.gae_lambda = float(cfg["ppo_gae_lambda"])
        self.clip_coef = float(cfg["ppo_clip_coef"])
        self.lr = float(cfg["ppo_learning_rate"])
        self.rollout_steps = int(cfg["ppo_rollout_steps"])
        self.minibatch_size = int(cfg["ppo_minibatch_size"])
        self.update_epochs = int(cfg["ppo_update_epochs"])
        self.entropy_coef = float(cfg["ppo_entropy_coef"])
        self.value_coef = float(cfg["ppo_value_coef"])
        self.max_grad_norm = float(cfg["ppo_max_grad_norm"])
        train_seed = int(cfg["train_seed"]) if seed is None else int(seed)
        hidden = tuple(parse_hidden(cfg["ppo_hidden"]))
        self.net = Mlp(MlpSpec(
            input_dim=env.observation_dim,
            hidden=hidden,
            heads={"action_nonplant": N_NONPLANT, "action_plant": N_PLANT, "value": 1},
            head_gains={"value": 1.0},
            seed=train_seed,
        ))
        self.optimizer = Adam(self.net.n_params())
        self.sampler = ActionSampler(train_seed + 1)
        self.rng = np.random.Generator(np.random.Philox(
            np.random.SeedSequence(train_seed + 2)))
        self.total_steps = 0
        self.episode_count = 0
        # live episode state
        self._obs = None
        self._mask = None
        self._w = 1.0
        self._ep_rewards = []
        self._ep_actions = []
        self._ep_last_info = {}

    # -- environment plumbing (curriculum overrides _reset_env) ---------------

    def _reset_env(self):
        return self.env.reset()

    def _begin_episode(self):
        obs, info = self._reset_env()
        self._obs = obs
        self._mask = np.asarray(info.get("action_mask", np.ones(self.env.n_actions, bool)))
        self._w = float(info.get("w_carbon", 1.0))
        self._ep_rewards = []
        self._ep_actions = []
        self._ep_last_info = info

    def logits_and_value(self, obs: np.ndarray):
        out = self.net.forward(obs)
        logits = np.concatenate([out["action_nonplant"], out["action_plant"]], axis=-1)
        value = out["value"]
        return logits, value

    def _policy_mask(self, env_mask: np.ndarray) -> np.ndarray | None:
        if not self.gated:
            return None
        return env_mask

    def acceptance_rate(self) -> float:
        return 1.0

    def _finish_episode(self, records: list, logs: list):
        rewards = np.asarray(self._ep_rewards)
        carbon = float(rewards[:, 0].sum())
        thaw = float(rewards[:, 1].sum())
        scal = float(self._w * carbon + (1.0 - self._w) * thaw)
        metrics = self._ep_last_info.get("metrics")
        records.append(TrainRecord(
            step=self.total_steps,
            episode=self.episode_count,
            scalarized_return=scal,
            carbon_return=carbon,
            thaw_return=thaw,
            final_density=getattr(metrics, "density", 0.0),
            final_conifer_fraction=getattr(metrics, "conifer_fraction", 0.0),
            w_carbon=self._w,
            accepted=1,
            acceptance_rate=self.acceptance_rate(),
        ))
        logs.append(EpisodeLog(
            episode=self._ep_last_info.get("episode", self.episode_count),
            w_carbon=self._w, actions=list(self._ep_actions),
            carbon_return=carbon, thaw_return=thaw))
        self.episode_count += 1
        self._on_episode_complete(scal)

    def _on_episode_complete(self, scalarized_return: float):
        pass

    # -- rollout + update ------------------------------------------------------

    def collect_rollout(self, n_steps: int, records: list, logs: list):
        obs_buf = np.zeros((n_steps, self.env.observation_dim))
        mask_buf = np.ones((n_steps, self.env.n_actions), dtype=bool)
        action_buf = np.zeros(n_steps, dtype=np.int64)
        logp_buf = np.zeros(n_steps)
        value_buf = np.zeros(n_steps)
        reward_buf = np.zeros(n_steps)
        done_buf = np.zeros(n_steps, dtype=bool)

        if self._obs is None:
            self._begin_episode()
        for t in range(n_steps):
            logits, value = self.logits_and_value(self._obs)
            mask = self._policy_mask(self._mask)
            probs = softmax_probs(logits, mask)
            action = self.sampler.sample(probs)
            logp = masked_log_softmax(logits, mask)[action]

            next_obs, reward, terminated, truncated, info = self.env.step(action)
            obs_buf[t] = self._obs
            mask_buf[t] = mask if mask is not None else True
            action_buf[t] = action
            logp_buf[t] = logp
            value_buf[t] = float(value[0])
            reward_buf[t] = scalarize(reward, self._w)
            done_buf[t] = terminated or truncated
            self.total_steps += 1

            self._ep_rewards.append(reward)
            self._ep_actions.append(int(action))
            self._ep_last_info = info
            if terminated or truncated:
                self._finish_episode(records, logs)
                self._begin_episode()
            else:
                self._obs = next_obs
                self._mask = np.asarray(info.get("action_mask",
                                                 np.ones(self.env.n_actions, bool)))
        _, last_value = self.logits_and_value(self._obs)
        return (obs_buf, mask_buf, action_buf, logp_buf, value_buf, reward_buf,
                done_buf, float(last_value[0]))

    def update(self, batch):
        (obs, masks, actions, old_logp, values, rewards, dones, last_value) = batch
        advantages, returns = gae_advantages(rewards, values, dones, last_value,
                                             self.gamma, self.gae_lambda)
        n = len(obs)
        indices = np.arange(n)
        for _ in range(self.update_epochs):
            perm = self.rng.permutation(indices)
            for start in range(0, n, self.minibatch_size):
                mb = perm[start:start + self.minibatch_size]
                if len(mb) == 0:
                    continue
                self._update_minibatch(obs[mb], masks[mb], actions[mb], old_logp[mb],
                                       advantages[mb], returns[mb])
        return advantages, returns

    def _update_minibatch(self, obs, masks, actions, old_logp, advantages, returns):
        mb_size = len(obs)
        adv = advantages
        std = adv.std()
        adv = (adv - adv.mean()) / (std + 1e-8)

        out = self.net.forward(obs)
        logits = np.concatenate([out["action_nonplant"], out["action_plant"]], axis=-1)
        value = out["value"][:, 0]
        use_masks = masks if self.gated else None
        logp_all = masked_log_softmax(logits, use_masks)
        new_logp = logp_all[np.arange(mb_size), actions]
        ratio = np.exp(new_logp - old_logp)

        # Gradient of -min(ratio*A, clip(ratio)*A): flows through the ratio
        # only where clipping does not bind in the improving direction.
        active = np.where(adv >= 0.0, ratio <= 1.0 + self.clip_coef,
                          ratio >= 1.0 - self.clip_coef)
        pg_weights = np.where(active, adv * ratio, 0.0) / mb_size
        dlogits = categorical_pg_grad(logits, actions, pg_weights, use_masks)
        if self.entropy_coef > 0.0:
            _, ent_grad = entropy_and_grad(logits, use_masks)
            dlogits = dlogits - self.entropy_coef * ent_grad
        dvalue = self.value_coef * (value - returns) / mb_size

        tape = self.net.backward({
            "action_nonplant": dlogits[:, :N_NONPLANT],
            "action_plant": dlogits[:, N_NONPLANT:],
            "value": dvalue[:, None],
        })
        tape.grads = global_norm_clip(tape.grads, self.max_grad_norm)
        self.net.set_flat(self.optimizer.step(tape.params, tape.grads, self.lr))

    def train(self, total_timesteps: int, on_rollout=None):
        records: list[TrainRecord] = []
        logs: list[EpisodeLog] = []
        while self.total_steps < total_timesteps:
            n = min(self.rollout_steps, total_timesteps - self.total_steps)
            batch = self.collect_rollout(n, records, logs)
            self.update(batch)
            if on_rollout is not None:
                on_rollout(self, records)
        return records, logs


def greedy_action(net: Mlp, obs: np.ndarray, mask: np.ndarray | None) -> int:
    out = net.forward(obs)
    logits = np.concatenate([out["action_nonplant"], out["action_plant"]], axis=-1)
    if mask is not None:
        if not mask.any():
            raise ContractViolation("all actions masked")
        logits = np.where(mask, logits, -np.inf)
    return int(np.argmax(logits))
