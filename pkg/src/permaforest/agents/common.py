"""Shared agent machinery: trajectories, categorical losses, rollout helpers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..nnet import masked_log_softmax, softmax_probs


@dataclass
class Trajectory:
    """One episode's step records. ``accrued`` holds the per-objective
    discounted return accumulated before each step (EUPG conditioning)."""

    observations: list = field(default_factory=list)
    inputs: list = field(default_factory=list)        # network inputs (may differ from obs)
    actions: list = field(default_factory=list)
    rewards: list = field(default_factory=list)       # vector rewards
    accrued: list = field(default_factory=list)
    log_probs: list = field(default_factory=list)
    values: list = field(default_factory=list)
    masks: list = field(default_factory=list)
    dones: list = field(default_factory=list)
    w_carbon: float = 1.0

    def __len__(self):
        return len(self.actions)

    def reward_array(self) -> np.ndarray:
        return np.asarray(self.rewards, dtype=np.float64)

    def scalarized_return(self, gamma: float = 1.0) -> float:
        r = self.reward_array()
        scal = self.w_carbon * r[:, 0] + (1.0 - self.w_carbon) * r[:, 1]
        discounts = gamma ** np.arange(len(scal))
        return float((discounts * scal).sum())

    def objective_returns(self) -> tuple[float, float]:
        r = self.reward_array()
        return float(r[:, 0].sum()), float(r[:, 1].sum())


def scalarize(reward: np.ndarray, w_carbon: float) -> float:
    return float(w_carbon * reward[0] + (1.0 - w_carbon) * reward[1])


def categorical_pg_grad(logits: np.ndarray, actions: np.ndarray, weights: np.ndarray,
                        masks: np.ndarray | None = None) -> np.ndarray:
    """d/dlogits of sum_i weights_i * (-log pi(a_i)).

    Gradient of -log softmax at the taken action is (p - onehot), scaled per
    row by the REINFORCE/PPO weight.
    """
    probs = softmax_probs(logits, masks)
    grad = probs.copy()
    rows = np.arange(len(actions))
    grad[rows, actions] -= 1.0
    return grad * weights[:, None]


def entropy_and_grad(logits: np.ndarray, masks: np.ndarray | None = None):
    """Mean policy entropy over the batch and its gradient w.r.t. logits."""
    logp = masked_log_softmax(logits, masks)
    probs = np.where(np.isneginf(logp), 0.0, np.exp(logp))
    plogp = np.where(probs > 0.0, probs * logp, 0.0)
    entropy = -plogp.sum(axis=-1)
    # dH/dz_j = -p_j (log p_j + H)
    safe_logp = np.where(probs > 0.0, logp, 0.0)
    grad = -probs * (safe_logp + entropy[:, None])
    return float(entropy.mean()), grad / len(logits)


def gae_advantages(rewards: np.ndarray, values: np.ndarray, dones: np.ndarray,
                   last_value: float, gamma: float, lam: float):
    """Generalized advantage estimation over a rollout that may span episode
    boundaries (``dones[t]`` marks the end of step t's episode)."""
    n = len(rewards)
    advantages = np.zeros(n)
    last_gae = 0.0
    for t in range(n - 1, -1, -1):
        next_value = last_value if t == n - 1 else values[t + 1]
        next_nonterminal = 0.0 if dones[t] else 1.0
        delta = rewards[t] + gamma * next_value * next_nonterminal - values[t]
        last_gae = delta + gamma * lam * next_nonterminal * last_gae
        advantages[t] = last_gae
    returns = advantages + values
    return advantages, returns


def global_norm_clip(grads: np.ndarray, max_norm: float) -> np.ndarray:
    norm = float(np.sqrt((grads * grads).sum()))
    if norm > max_norm and norm > 0.0:
        return grads * (max_norm / norm)
    return grads


class ActionSampler:
    """Deterministic action sampling: one uniform per decision from a seeded
    Philox stream, consumed via inverse CDF."""

    def __init__(self, seed: int):
        self._gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))

    def sample(self, probs: np.ndarray) -> int:
        u = self._gen.random()
        cdf = np.cumsum(probs)
        idx = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
        return min(idx, probs.size - 1)

    def uniform(self) -> float:
        return self._gen.random()


@dataclass
class TrainRecord:
    """One learning-curve row (metrics.csv schema)."""

    step: int
    episode: int
    scalarized_return: float
    carbon_return: float
    thaw_return: float
    final_density: float
    final_conifer_fraction: float
    w_carbon: float
    accepted: int = 1
    acceptance_rate: float = 1.0

    def as_row(self) -> list:
        return [self.step, self.episode, repr(self.scalarized_return),
                repr(self.carbon_return), repr(self.thaw_return),
                repr(self.final_density), repr(self.final_conifer_fraction),
                repr(self.w_carbon), self.accepted, repr(self.acceptance_rate)]


TRAIN_COLUMNS = ["step", "episode", "scalarized_return", "carbon_return", "thaw_return",
                 "final_density", "final_conifer_fraction", "w_carbon", "accepted",
                 "acceptance_rate"]


@dataclass
class EpisodeLog:
    """Replay source: enough to re-execute one training episode exactly."""

    episode: int
    w_carbon: float
    actions: list
    carbon_return: float
    thaw_return: float

    def as_row(self) -> list:
        return [self.episode, repr(self.w_carbon),
                " ".join(str(a) for a in self.actions),
                repr(self.carbon_return), repr(self.thaw_return)]


EPISODE_COLUMNS = ["episode", "w_carbon", "actions", "carbon_return", "thaw_return"]
