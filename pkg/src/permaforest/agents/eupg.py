"""Episodic policy gradient conditioned on accrued per-objective returns.

The policy input is the observation (whose first entry is the preference
weight) concatenated with the per-objective return accrued so far in the
episode. Training scalarizes the reward vector with the episode's weight and
applies a REINFORCE update with a batch mean-return baseline. Fixed-weight
and sampled-weight training differ only in how the environment draws the
preference per episode.
"""

from __future__ import annotations

import numpy as np

from ..config import parse_hidden
from ..nnet import Adam, Mlp, MlpSpec, softmax_probs
from .common import (
    ActionSampler,
    EpisodeLog,
    TrainRecord,
    Trajectory,
    categorical_pg_grad,
    entropy_and_grad,
    global_norm_clip,
)


class EupgTrainer:
    def __init__(self, env, cfg: dict, seed: int | None = None):
        self.env = env
        self.cfg = cfg
        self.gamma = float(cfg["eupg_gamma"])
        self.lr = float(cfg["eupg_learning_rate"])
        self.batch_episodes = int(cfg["eupg_batch_episodes"])
        self.entropy_coef = float(cfg["eupg_entropy_coef"])
        self.return_scale = float(cfg["eupg_return_scale"])
        self.train_seed = int(cfg["train_seed"]) if seed is None else int(seed)
        hidden = tuple(parse_hidden(cfg["eupg_hidden"]))
        self.net = Mlp(MlpSpec(
            input_dim=env.observation_dim + 2,
            hidden=hidden,
            heads={"action": env.n_actions},
            seed=self.train_seed,
        ))
        self.optimizer = Adam(self.net.n_params())
        self.total_steps = 0
        self.episode_count = 0

    def _policy_input(self, obs: np.ndarray, accrued: np.ndarray) -> np.ndarray:
        return np.concatenate([obs, accrued / self.return_scale])

    def collect_episode(self, episode_index: int | None = None) -> tuple[Trajectory, dict]:
        """Roll out one episode. Action sampling is seeded per episode index,
        so a batch of episodes can be collected in any order (or in parallel
        workers) with identical results."""
        index = self.episode_count if episode_index is None else int(episode_index)
        obs, info = self.env.reset(episode_seed=index)
        sampler = ActionSampler(
            np.random.SeedSequence(entropy=self.train_seed, spawn_key=(5, index))
            .generate_state(1)[0])
        traj = Trajectory(w_carbon=float(info.get("w_carbon", 1.0)))
        accrued = np.zeros(2)
        t = 0
        done = False
        last_info = info
        while not done:
            x = self._policy_input(obs, accrued)
            logits = self.net.forward(x)["action"]
            probs = softmax_probs(logits)
            action = sampler.sample(probs)
            obs, reward, terminated, truncated, step_info = self.env.step(action)
            traj.inputs.append(x)
            traj.actions.append(action)
            traj.rewards.append(reward)
            traj.accrued.append(accrued.copy())
            accrued = accrued + (self.gamma ** t) * reward
            t += 1
            done = terminated or truncated
            last_info = step_info
        self.total_steps += t
        self.episode_count = index + 1
        return traj, last_info

    def update(self, batch: list[Trajectory]):
        returns = np.array([traj.scalarized_return(self.gamma) for traj in batch])
        baseline = returns.mean()
        inputs = np.concatenate([np.asarray(traj.inputs) for traj in batch])
        actions = np.concatenate([np.asarray(traj.actions) for traj in batch])
        weights = np.concatenate([
            np.full(len(traj), (ret - baseline)) for traj, ret in zip(batch, returns)
        ]) / len(inputs)
        logits = self.net.forward(inputs)["action"]
        dlogits = categorical_pg_grad(logits, actions, weights)
        if self.entropy_coef > 0.0:
            _, ent_grad = entropy_and_grad(logits)
            dlogits = dlogits - self.entropy_coef * ent_grad
        tape = self.net.backward({"action": dlogits})
        tape.grads = global_norm_clip(tape.grads, 10.0)
        self.net.set_flat(self.optimizer.step(tape.params, tape.grads, self.lr))
        return returns

    def train(self, total_timesteps: int, on_episode=None):
        """Run until the step budget is spent; returns (records, episode_logs)."""
        records: list[TrainRecord] = []
        logs: list[EpisodeLog] = []
        batch: list[Trajectory] = []
        while self.total_steps < total_timesteps:
            traj, last_info = self.collect_episode()
            batch.append(traj)
            carbon, thaw = traj.objective_returns()
            metrics = last_info.get("metrics")
            record = TrainRecord(
                step=self.total_steps,
                episode=self.episode_count - 1,
                scalarized_return=traj.scalarized_return(1.0),
                carbon_return=carbon,
                thaw_return=thaw,
                final_density=getattr(metrics, "density", 0.0),
                final_conifer_fraction=getattr(metrics, "conifer_fraction", 0.0),
                w_carbon=traj.w_carbon,
            )
            records.append(record)
            logs.append(EpisodeLog(
                episode=self.episode_count - 1, w_carbon=traj.w_carbon,
                actions=list(traj.actions), carbon_return=carbon, thaw_return=thaw))
            if len(batch) >= self.batch_episodes:
                self.update(batch)
                batch = []
            if on_episode is not None:
                on_episode(self, record)
        if batch:
            self.update(batch)
        return records, logs
