"""Minimal feed-forward networks with exact reverse-mode gradients.

Everything is plain float64 numpy with a fixed parameter ordering, so
training is bit-reproducible given seeds. A network is a tanh MLP trunk with
any number of named linear heads (action logits, value, selection score).
Gradients come from a hand-written backward pass validated against central
finite differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation

CHECKPOINT_VERSION = 1


@dataclass
class MlpSpec:
    input_dim: int
    hidden: tuple
    heads: dict                      # name -> output dim
    head_gains: dict = field(default_factory=dict)  # name -> init gain (default 0.01)
    seed: int = 0

    def to_json(self) -> str:
        return json.dumps({
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "heads": dict(self.heads),
            "head_gains": dict(self.head_gains),
            "seed": self.seed,
        })

    @staticmethod
    def from_json(text: str) -> "MlpSpec":
        raw = json.loads(text)
        return MlpSpec(
            input_dim=int(raw["input_dim"]),
            hidden=tuple(raw["hidden"]),
            heads={k: int(v) for k, v in raw["heads"].items()},
            head_gains={k: float(v) for k, v in raw["head_gains"].items()},
            seed=int(raw["seed"]),
        )


@dataclass
class GradientTape:
    params: np.ndarray
    grads: np.ndarray
    step: int = 0


def _orthogonal(rng: np.random.Generator, shape, gain: float) -> np.ndarray:
    a = rng.standard_normal(shape)
    q, r = np.linalg.qr(a if shape[0] >= shape[1] else a.T)
    q = q * np.sign(np.diag(r))  # deterministic sign convention
    if shape[0] < shape[1]:
        q = q.T
    return gain * q[: shape[0], : shape[1]]


class Mlp:
    """tanh trunk + named linear heads; hidden layers use orthogonal init
    (gain sqrt(2)), heads small-scale orthogonal (default gain 0.01)."""

    def __init__(self, spec: MlpSpec):
        self.spec = spec
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(spec.seed)))
        self.params: dict[str, np.ndarray] = {}
        dims = [spec.input_dim, *spec.hidden]
        for i in range(len(spec.hidden)):
            self.params[f"W{i}"] = _orthogonal(rng, (dims[i], dims[i + 1]), np.sqrt(2.0))
            self.params[f"b{i}"] = np.zeros(dims[i + 1])
        trunk_out = dims[-1]
        for name, out_dim in spec.heads.items():
            gain = spec.head_gains.get(name, 0.01)
            self.params[f"head_{name}_W"] = _orthogonal(rng, (trunk_out, out_dim), gain)
            self.params[f"head_{name}_b"] = np.zeros(out_dim)
        self._order = list(self.params)
        self._cache = None

    # -- flat parameter vector -------------------------------------------------

    def n_params(self) -> int:
        return sum(self.params[k].size for k in self._order)

    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.params[k].ravel() for k in self._order])

    def set_flat(self, flat: np.ndarray):
        if flat.size != self.n_params():
            raise ContractViolation("parameter vector size mismatch")
        offset = 0
        for k in self._order:
            size = self.params[k].size
            self.params[k] = flat[offset:offset + size].reshape(self.params[k].shape).copy()
            offset += size

    # -- forward / backward ------------------------------------------------------

    def forward(self, x: np.ndarray) -> dict[str, np.ndarray]:
        """Returns head outputs; caches activations for backward.

        ``x`` may be a single observation (d,) or a batch (N, d); head outputs
        match (head_dim,) or (N, head_dim).
        """
        single = x.ndim == 1
        h = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if h.shape[1] != self.spec.input_dim:
            raise ContractViolation(
                f"input dim {h.shape[1]} != expected {self.spec.input_dim}")
        activations = [h]
        for i in range(len(self.spec.hidden)):
            h = np.tanh(h @ self.params[f"W{i}"] + self.params[f"b{i}"])
            activations.append(h)
        outputs = {}
        for name in self.spec.heads:
            out = h @ self.params[f"head_{name}_W"] + self.params[f"head_{name}_b"]
            outputs[name] = out[0] if single else out
        self._cache = (activations, single)
        return outputs

    def backward(self, head_grads: dict[str, np.ndarray]) -> GradientTape:
        """Exact gradients of sum(head_grad * head_output) w.r.t. parameters.

        ``head_grads`` holds dL/d(head output) per head (missing heads get no
        gradient). Requires a cached forward pass.
        """
        if self._cache is None:
            raise ContractViolation("backward() requires a preceding forward()")
        activations, single = self._cache
        trunk = activations[-1]
        grads = {k: np.zeros_like(v) for k, v in self.params.items()}
        dh = np.zeros_like(trunk)
        for name, g in head_grads.items():
            g2 = np.atleast_2d(np.asarray(g, dtype=np.float64))
            grads[f"head_{name}_W"] = trunk.T @ g2
            grads[f"head_{name}_b"] = g2.sum(axis=0)
            dh = dh + g2 @ self.params[f"head_{name}_W"].T
        for i in reversed(range(len(self.spec.hidden))):
            dz = dh * (1.0 - activations[i + 1] ** 2)
            grads[f"W{i}"] = activations[i].T @ dz
            grads[f"b{i}"] = dz.sum(axis=0)
            dh = dz @ self.params[f"W{i}"].T
        flat = np.concatenate([grads[k].ravel() for k in self._order])
        return GradientTape(params=self.get_flat(), grads=flat)


class Adam:
    """Standard bias-corrected adaptive-moment update over the flat vector."""

    def __init__(self, n_params: int, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0
        self.beta1, self.beta2, self.eps = beta1, beta2, eps

    def step(self, params: np.ndarray, grads: np.ndarray, lr: float) -> np.ndarray:
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grads
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grads * grads
        m_hat = self.m / (1.0 - self.beta1 ** self.t)
        v_hat = self.v / (1.0 - self.beta2 ** self.t)
        return params - lr * m_hat / (np.sqrt(v_hat) + self.eps)


def adam_step(net: Mlp, tape: GradientTape, lr: float, optimizer: Adam) -> np.ndarray:
    """Apply one Adam update to the network in place; returns the new flat
    parameter vector."""
    new_flat = optimizer.step(tape.params, tape.grads, lr)
    tape.step += 1
    net.set_flat(new_flat)
    return new_flat


# -- categorical head utilities --------------------------------------------------


def masked_log_softmax(logits: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Log-probabilities with masked entries at exactly -inf equivalent
    (probability 0); relative ratios of unmasked entries are unchanged."""
    z = np.array(logits, dtype=np.float64, copy=True)
    if mask is not None:
        if not mask.any():
            raise ContractViolation("all actions masked")
        z = np.where(mask, z, -np.inf)
    z_max = np.max(z, axis=-1, keepdims=True)
    shifted = z - z_max
    with np.errstate(invalid="ignore"):
        exp = np.exp(shifted)
    total = exp.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = shifted - np.log(total)
    return np.where(np.isneginf(z), -np.inf, out)


def softmax_probs(logits: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    logp = masked_log_softmax(logits, mask)
    with np.errstate(over="ignore"):
        p = np.exp(logp)
    return np.where(np.isneginf(logp), 0.0, p)


def sample_categorical(probs: np.ndarray, u: float) -> int:
    """Inverse-CDF sample from one uniform draw (deterministic given u)."""
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
    return min(idx, probs.size - 1)


# -- checkpoints ------------------------------------------------------------------


def save_checkpoint(path, net: Mlp, optimizer: Adam | None = None,
                    extra: dict | None = None):
    payload = {
        "version": np.int64(CHECKPOINT_VERSION),
        "spec_json": np.frombuffer(net.spec.to_json().encode(), dtype=np.uint8),
        "flat": net.get_flat(),
        "extra_json": np.frombuffer(json.dumps(extra or {}).encode(), dtype=np.uint8),
    }
    if optimizer is not None:
        payload.update(adam_m=optimizer.m, adam_v=optimizer.v,
                       adam_t=np.int64(optimizer.t))
    np.savez(path, **payload)


def load_checkpoint(path) -> tuple[Mlp, Adam | None, dict]:
    with np.load(path) as data:
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ContractViolation(f"unsupported checkpoint version {version}")
        spec = MlpSpec.from_json(bytes(data["spec_json"]).decode())
        net = Mlp(spec)
        net.set_flat(data["flat"])
        optimizer = None
        if "adam_m" in data:
            optimizer = Adam(net.n_params())
            optimizer.m = data["adam_m"].copy()
            optimizer.v = data["adam_v"].copy()
            optimizer.t = int(data["adam_t"])
        extra = json.loads(bytes(data["extra_json"]).decode())
    return net, optimizer, extra
