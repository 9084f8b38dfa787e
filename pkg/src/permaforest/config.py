"""Flat key=value configuration.

One registry covers every tunable: site-parameter pins, physics constants,
environment constants, and training hyperparameters. Unknown keys fail fast
with the offending key named, so a typo never silently becomes a default.
"""

from __future__ import annotations

from pathlib import Path

from .errors import ConfigError
from .params import (
    FIXED_DEFAULTS,
    SAMPLED_KEYS,
    SAMPLED_RANGES,
    UNSLOTTED_DEFAULTS,
)

# Environment constants and operational limits.
ENV_DEFAULTS = {
    "episode_length": 50,
    "max_total_carbon": 50.0,
    "max_carbon_change": 2.0,
    "max_thaw_degree_days": 40.0,
    "biomass_carbon_limit": 15.0,
    "soil_carbon_limit": 20.0,
    "carbon_limit_penalty": 0.5,
    "warming_penalty_factor": 5.0,
    "safe_min_density": 150.0,
    "max_density": 2000.0,
    "max_density_penalty": 1.0,
    "ineffective_thinning_penalty": 0.5,
    "ineffective_planting_penalty": 1.0,
    "max_hwp_sales": 1.0,
    "hwp_sale_reward_multiplier": 0.0,
    "stock_bonus_multiplier": 0.0,
}

# Run-level keys.
RUN_DEFAULTS = {
    "algorithm": "ppo_gated",       # eupg_fixed | eupg_variable | ppo_gated | curriculum_ppo
    "mode": "generalist",           # generalist | site_specific
    "timesteps": 100_000,
    "dt_minutes": 60,               # one of {15, 30, 60, 180}
    "site_seed": 1,
    "weather_seed": 1,
    "disturbance_seed": 1,
    "preference_seed": 1,
    "train_seed": 1,
    "fixed_lambda": 1.0,            # carbon weight for eupg_fixed
    "preference_mode": "sampled",   # fixed | sampled
    "workers": 1,
    "checkpoint_every": 200,        # episodes
    "eval_lambda_grid": 11,
    "eval_episodes_per_lambda": 10,
    "eval_seed": 12345,
}

# Training hyperparameters (defaults per algorithm documented in README).
HYPER_DEFAULTS = {
    "eupg_learning_rate": 1e-3,
    "eupg_gamma": 1.0,
    "eupg_hidden": "128,64",
    "eupg_batch_episodes": 10,
    "eupg_entropy_coef": 0.0,
    "eupg_return_scale": 50.0,      # accrued-return normalizer fed to the policy
    "ppo_learning_rate": 3e-4,
    "ppo_gamma": 0.99,
    "ppo_hidden": "64,64",
    "ppo_gae_lambda": 0.95,
    "ppo_clip_coef": 0.2,
    "ppo_rollout_steps": 2048,
    "ppo_minibatch_size": 64,
    "ppo_update_epochs": 10,
    "ppo_entropy_coef": 0.01,
    "ppo_value_coef": 0.5,
    "ppo_max_grad_norm": 0.5,
    "curriculum_threshold": 0.5,
    "curriculum_accept_low": 0.5,
    "curriculum_accept_high": 0.7,
    "curriculum_threshold_step": 0.02,
    "curriculum_window": 50,        # episodes per acceptance-rate check
    "curriculum_selector_hidden": "32,32",
    "curriculum_selector_lr": 1e-3,
}

_STRING_KEYS = {
    "algorithm", "mode", "preference_mode",
    "eupg_hidden", "ppo_hidden", "curriculum_selector_hidden",
}
_INT_KEYS = {
    "episode_length", "timesteps", "dt_minutes", "site_seed", "weather_seed",
    "disturbance_seed", "preference_seed", "train_seed", "workers",
    "checkpoint_every", "eval_lambda_grid", "eval_episodes_per_lambda",
    "eval_seed", "eupg_batch_episodes", "ppo_rollout_steps",
    "ppo_minibatch_size", "ppo_update_epochs", "curriculum_window",
}

_CHOICES = {
    "algorithm": {"eupg_fixed", "eupg_variable", "ppo_gated", "curriculum_ppo"},
    "mode": {"generalist", "site_specific"},
    "preference_mode": {"fixed", "sampled"},
    "dt_minutes": {15, 30, 60, 180},
}


def default_config() -> dict:
    cfg = {}
    cfg.update(FIXED_DEFAULTS)
    cfg.update(UNSLOTTED_DEFAULTS)
    cfg.update(ENV_DEFAULTS)
    cfg.update(RUN_DEFAULTS)
    cfg.update(HYPER_DEFAULTS)
    return cfg


# Site-parameter pins are valid keys but have no default (absent = sampled).
PINNABLE_KEYS = set(SAMPLED_KEYS)
KNOWN_KEYS = set(default_config()) | PINNABLE_KEYS


def _coerce(key: str, raw):
    if key in _STRING_KEYS:
        value = str(raw)
    elif key in _INT_KEYS:
        try:
            value = int(str(raw))
        except ValueError:
            raise ConfigError(f"config key {key!r}: expected integer, got {raw!r}")
    else:
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"config key {key!r}: expected number, got {raw!r}")
    if key in _CHOICES and value not in _CHOICES[key]:
        raise ConfigError(
            f"config key {key!r}: {value!r} not one of {sorted(map(str, _CHOICES[key]))}"
        )
    if key in SAMPLED_RANGES:
        lo, hi = SAMPLED_RANGES[key]
        if not (lo <= value <= hi):
            raise ConfigError(f"config key {key!r}: {value} outside [{lo}, {hi}]")
    return value


def parse_config_text(text: str) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Resolve defaults <- file <- overrides into one flat dict."""
    cfg = default_config()
    if path is not None:
        cfg.update(parse_config_text(Path(path).read_text()))
    for key, raw in (overrides or {}).items():
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        cfg[key] = _coerce(key, raw)
    return cfg


def apply_overrides(cfg: dict, overrides: dict | None) -> dict:
    """Validate and merge override keys onto an existing config dict."""
    out = dict(cfg)
    for key, raw in (overrides or {}).items():
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        out[key] = _coerce(key, raw)
    return out


def site_overrides(cfg: dict) -> dict:
    """Extract pinned site parameters and physics-constant overrides."""
    pins = {k: cfg[k] for k in PINNABLE_KEYS if k in cfg}
    for key in FIXED_DEFAULTS:
        pins[key] = cfg[key]
    for key in UNSLOTTED_DEFAULTS:
        pins[key] = cfg[key]
    return pins


def parse_hidden(spec: str) -> list[int]:
    try:
        sizes = [int(tok) for tok in str(spec).split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"bad hidden-layer spec {spec!r}")
    if not sizes or any(s <= 0 for s in sizes):
        raise ConfigError(f"bad hidden-layer spec {spec!r}")
    return sizes
