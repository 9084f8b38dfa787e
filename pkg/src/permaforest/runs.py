"""Run persistence and orchestration: train, evaluate, simulate, replay.

A run directory is fully reconstructible from its manifest:

    run_dir/
      manifest.json      resolved config + seeds + code version
      metrics.csv        one learning-curve row per completed episode
      episodes.csv       replay source: episode index, weight, action list
      checkpoints/       final.npz (+ periodic, + selector_final.npz)
      eval/              tradeoff.csv, pareto.json, monotonicity.json, strategy.csv
"""

from __future__ import annotations

import csv
import json
import multiprocessing
from pathlib import Path

import numpy as np

from . import __version__
from .agents.common import EPISODE_COLUMNS, TRAIN_COLUMNS
from .agents.curriculum import CurriculumPpoTrainer
from .agents.eupg import EupgTrainer
from .agents.evaluate import (
    ConstantPolicy,
    GreedyEupgPolicy,
    GreedyPpoPolicy,
    evaluate_policy,
    run_baselines,
)
from .agents.ppo import PpoTrainer
from .config import apply_overrides, site_overrides
from .env import ForestEnv, compute_reward
from .errors import ConfigError, ReplayMismatch
from .evalmetrics import (
    ParetoPoint,
    lambda_monotonicity_violations,
    pareto_payload,
)
from .nnet import load_checkpoint, save_checkpoint
from .params import fixed_site_parameters
from .rng import RngStream
from .sim import METRICS_COLUMNS, Simulator, initial_stand, metrics_to_row
from .stand import StandState


def write_csv(path, header: list, rows: list):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def read_csv(path) -> tuple[list, list]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return header, list(reader)


def write_manifest(run_dir: Path, cfg: dict, extra: dict | None = None):
    manifest = {
        "version": __version__,
        "config": cfg,
        "episode_seed_rule": "streams keyed by (base seed, stream name, episode index)",
    }
    manifest.update(extra or {})
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def read_manifest(run_dir: Path) -> dict:
    path = Path(run_dir) / "manifest.json"
    if not path.exists():
        raise ConfigError(f"no manifest at {path}")
    return json.loads(path.read_text())


def _training_env(cfg: dict) -> ForestEnv:
    alg = cfg["algorithm"]
    if alg == "eupg_fixed":
        cfg = apply_overrides(cfg, {"preference_mode": "fixed"})
    elif alg == "eupg_variable":
        cfg = apply_overrides(cfg, {"preference_mode": "sampled"})
    if alg == "curriculum_ppo" and cfg["mode"] != "generalist":
        raise ConfigError("curriculum_ppo needs mode = generalist (site-context slice)")
    return ForestEnv(cfg)


def build_trainer(cfg: dict, env=None):
    env = env if env is not None else _training_env(cfg)
    alg = cfg["algorithm"]
    if alg in ("eupg_fixed", "eupg_variable"):
        return EupgTrainer(env, cfg)
    if alg == "ppo_gated":
        return PpoTrainer(env, cfg)
    if alg == "curriculum_ppo":
        return CurriculumPpoTrainer(env, cfg)
    raise ConfigError(f"unknown algorithm {alg!r}")


def _checkpoint_extra(cfg: dict) -> dict:
    return {
        "algorithm": cfg["algorithm"],
        "mode": cfg["mode"],
        "eupg_return_scale": cfg["eupg_return_scale"],
        "eupg_gamma": cfg["eupg_gamma"],
    }


def run_train(cfg: dict, run_dir) -> Path:
    """Train one agent and persist the run. Returns the run directory."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "checkpoints").mkdir(exist_ok=True)
    write_manifest(run_dir, cfg, {"kind": "train"})

    trainer = build_trainer(cfg)
    every = max(1, int(cfg["checkpoint_every"]))
    extra = _checkpoint_extra(cfg)
    last_saved = {"episode": -1}

    def on_episode(tr, record):
        if record.episode % every == every - 1:
            save_checkpoint(run_dir / "checkpoints" / f"ckpt_ep{record.episode + 1}.npz",
                            tr.net, tr.optimizer, extra)
            last_saved["episode"] = record.episode

    if isinstance(trainer, EupgTrainer):
        records, logs = trainer.train(int(cfg["timesteps"]), on_episode=on_episode)
    else:
        def on_rollout(tr, records_so_far):
            save_checkpoint(run_dir / "checkpoints" / "ckpt_latest.npz",
                            tr.net, tr.optimizer, extra)
        records, logs = trainer.train(int(cfg["timesteps"]), on_rollout=on_rollout)

    save_checkpoint(run_dir / "checkpoints" / "final.npz", trainer.net,
                    trainer.optimizer, extra)
    if isinstance(trainer, CurriculumPpoTrainer):
        save_checkpoint(run_dir / "checkpoints" / "selector_final.npz",
                        trainer.selector, trainer.selector_optimizer,
                        {"threshold": trainer.threshold})
    write_csv(run_dir / "metrics.csv", TRAIN_COLUMNS, [r.as_row() for r in records])
    write_csv(run_dir / "episodes.csv", EPISODE_COLUMNS, [l.as_row() for l in logs])
    return run_dir


def policy_from_checkpoint(path, extra_override: dict | None = None):
    net, _, extra = load_checkpoint(path)
    extra.update(extra_override or {})
    alg = extra.get("algorithm", "ppo_gated")
    if alg in ("eupg_fixed", "eupg_variable"):
        return GreedyEupgPolicy(net, float(extra.get("eupg_return_scale", 50.0)),
                                float(extra.get("eupg_gamma", 1.0))), alg
    return GreedyPpoPolicy(net, gated=True), alg


def _eval_one_lambda(args):
    cfg, checkpoint_path, lam, episodes = args
    policy, alg = policy_from_checkpoint(checkpoint_path)
    record = evaluate_policy(policy, alg, cfg, [lam], episodes)
    return record.rows, record.strategy_rows


def run_evaluate(run_dir, lambda_points: int | None = None,
                 episodes: int | None = None, workers: int = 1) -> Path:
    """Evaluate a trained run over the preference grid; writes eval/
    artifacts and returns the eval directory."""
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    cfg = manifest["config"]
    checkpoint = run_dir / "checkpoints" / "final.npz"
    if not checkpoint.exists():
        raise ConfigError(f"no checkpoint at {checkpoint}")
    n_lam = int(lambda_points if lambda_points is not None else cfg["eval_lambda_grid"])
    if n_lam < 2:
        raise ConfigError("the preference grid needs at least 2 points "
                          "(lambda-monotonicity is undefined otherwise)")
    n_ep = int(episodes if episodes is not None else cfg["eval_episodes_per_lambda"])
    grid = [float(x) for x in np.linspace(0.0, 1.0, n_lam)]

    if workers > 1:
        jobs = [(cfg, str(checkpoint), lam, n_ep) for lam in grid]
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_eval_one_lambda, jobs)
        rows = [r for rows_part, _ in results for r in rows_part]
        strategy = [s for _, strat_part in results for s in strat_part]
        policy, alg = policy_from_checkpoint(checkpoint)
        from .agents.evaluate import EvaluationRecord
        record = EvaluationRecord(policy_id=alg, rows=rows, strategy_rows=strategy)
    else:
        policy, alg = policy_from_checkpoint(checkpoint)
        record = evaluate_policy(policy, alg, cfg, grid, n_ep)

    baselines = run_baselines(cfg, grid, n_ep)

    eval_dir = run_dir / "eval"
    eval_dir.mkdir(exist_ok=True)
    all_records = [record, *baselines]
    tradeoff_header = ["policy", "lambda", "episode", "episode_seed", "carbon_return",
                       "thaw_return", "scalarized", "final_density", "final_conifer"]
    tradeoff_rows = [[r[k] for k in tradeoff_header]
                     for rec in all_records for r in rec.rows]
    write_csv(eval_dir / "tradeoff.csv", tradeoff_header, tradeoff_rows)

    strategy_header = ["policy", "lambda", "episode", "year", "density",
                       "conifer_fraction", "action"]
    strategy_rows = [[row[k] for k in strategy_header]
                     for rec in all_records for row in rec.strategy_rows]
    write_csv(eval_dir / "strategy.csv", strategy_header, strategy_rows)

    points = []
    monotonicity = {}
    for rec in all_records:
        means = rec.per_lambda_means()
        points.extend(ParetoPoint(m["mean_carbon_return"], m["mean_thaw_return"],
                                  m["lambda"], rec.policy_id) for m in means)
        monotonicity[rec.policy_id] = lambda_monotonicity_violations(
            [(m["lambda"], m["mean_carbon_return"]) for m in means])
    (eval_dir / "pareto.json").write_text(json.dumps(pareto_payload(points), indent=2))
    (eval_dir / "monotonicity.json").write_text(json.dumps({
        "violation_fraction": monotonicity,
        "grid": grid,
        "definition": "fraction of adjacent preference pairs where mean carbon "
                      "return strictly decreases as the carbon weight rises",
    }, indent=2))
    return eval_dir


def run_replay(run_dir, episode: int) -> int:
    """Re-execute one stored training episode and diff the outcome.

    Returns 0 on an exact match; raises ReplayMismatch (with the offending
    row) otherwise.
    """
    run_dir = Path(run_dir)
    manifest = read_manifest(run_dir)
    cfg = manifest["config"]
    header, rows = read_csv(run_dir / "episodes.csv")
    target = None
    row_number = None
    for i, row in enumerate(rows):
        if int(row[0]) == episode:
            target = dict(zip(header, row))
            row_number = i + 2  # 1-based, after header
            break
    if target is None:
        raise ReplayMismatch(f"episode {episode} not found in episodes.csv")

    env = _training_env(cfg)
    obs, info = env.reset(episode_seed=episode)
    stored_w = float(target["w_carbon"])
    if abs(info["w_carbon"] - stored_w) > 0.0:
        raise ReplayMismatch(
            f"episodes.csv row {row_number}: preference weight mismatch "
            f"(stored {stored_w!r}, replayed {info['w_carbon']!r})")
    actions = [int(a) for a in target["actions"].split()] if target["actions"] else []
    rewards = []
    for action in actions:
        obs, reward, terminated, truncated, info = env.step(action)
        rewards.append(reward)
    arr = np.asarray(rewards) if rewards else np.zeros((0, 2))
    # same reduction as training-time bookkeeping, so equality is bitwise
    carbon, thaw = float(arr[:, 0].sum()), float(arr[:, 1].sum())
    for column, value in (("carbon_return", carbon), ("thaw_return", thaw)):
        if float(target[column]) != value:
            raise ReplayMismatch(
                f"episodes.csv row {row_number}: {column} mismatch "
                f"(stored {target[column]}, replayed {value!r})")
    return 0


def simulate_run(cfg: dict, years: int, actions: list[tuple[float, float]],
                 out_csv, weather_csv=None, flux_trace=None) -> list:
    """Agent-free simulator rollout; one metrics row (plus the reward the
    environment would pay) per year."""
    p = fixed_site_parameters(int(cfg["site_seed"]), site_overrides(cfg))
    weather_rng = RngStream(int(cfg["weather_seed"]), stream="weather")
    disturb_rng = RngStream(int(cfg["disturbance_seed"]), stream="disturbance")
    sim = Simulator(p, initial_stand(p), weather_rng, disturb_rng,
                    dt_minutes=int(cfg["dt_minutes"]),
                    deterministic_weather_noise=(cfg["mode"] == "site_specific"))
    weather_log = [] if weather_csv else None
    if weather_log is not None:
        sim.weather_log = weather_log

    trace_rows = []
    rows = []
    for year in range(years):
        density_change, conifer_target = actions[min(year, len(actions) - 1)]
        trace = sim.trace_buffer() if flux_trace else None
        metrics, _ = sim.simulate_year(density_change, conifer_target, trace=trace)
        reward, _ = compute_reward(metrics, cfg)
        rows.append(metrics_to_row(metrics) + [repr(reward.r_carbon), repr(reward.r_thaw)])
        if trace is not None:
            trace_rows.append(trace)
    header = METRICS_COLUMNS + ["r_carbon", "r_thaw"]
    write_csv(out_csv, header, rows)

    if weather_log is not None:
        wrows = []
        for y, annual in enumerate(weather_log):
            for d in range(1, 366):
                day = annual.day(d)
                wrows.append([y + 1, day.day_of_year, repr(day.mean_temp),
                              repr(day.diurnal_amplitude_today), repr(day.precip_amount),
                              "snow" if day.precip_is_snow else
                              ("rain" if day.precip_amount > 0 else "dry")])
        write_csv(weather_csv, ["year", "doy", "mean_temp", "diurnal_amplitude",
                                "precip_mm", "type"], wrows)
    if flux_trace and trace_rows:
        from .kernel import TRACE_COLUMNS
        stacked = np.concatenate(trace_rows)
        with open(flux_trace, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(TRACE_COLUMNS)
            for row in stacked:
                writer.writerow([repr(v) for v in row])
    return rows


def load_stand_snapshot(path) -> StandState:
    return StandState.from_json(Path(path).read_text())
