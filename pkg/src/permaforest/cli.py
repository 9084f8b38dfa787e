"""Command-line harness.

Subcommands: train, evaluate, simulate, replay, report. Exit codes:
0 success, 1 usage error, 2 config error, 3 physics fault, 4 replay
mismatch.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, PhysicsFault, ReplayMismatch

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_PHYSICS = 3
EXIT_REPLAY = 4


def _parse_overrides(pairs: list[str]) -> dict:
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _resolve_config(args) -> dict:
    overrides = _parse_overrides(getattr(args, "set", None))
    for flag in ("algorithm", "mode", "timesteps", "dt_minutes", "site_seed",
                 "weather_seed", "train_seed", "fixed_lambda", "workers"):
        value = getattr(args, flag, None)
        if value is not None:
            overrides[flag] = value
    config_path = getattr(args, "config", None)
    if config_path is not None and not Path(config_path).exists():
        raise ConfigError(f"config file not found: {config_path}")
    return load_config(config_path, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permaforest",
        description="Boreal forest management simulator, two-objective "
                    "environment, and baseline trainers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config key (repeatable)")

    p_train = sub.add_parser("train", help="train one agent into a run directory")
    add_config_flags(p_train)
    p_train.add_argument("--out", required=True, help="run directory to create")
    p_train.add_argument("--algorithm", choices=["eupg_fixed", "eupg_variable",
                                                 "ppo_gated", "curriculum_ppo"])
    p_train.add_argument("--mode", choices=["generalist", "site_specific"])
    p_train.add_argument("--timesteps", type=int)
    p_train.add_argument("--dt-minutes", dest="dt_minutes", type=int)
    p_train.add_argument("--site-seed", dest="site_seed", type=int)
    p_train.add_argument("--train-seed", dest="train_seed", type=int)
    p_train.add_argument("--fixed-lambda", dest="fixed_lambda", type=float)
    p_train.add_argument("--site-seeds", help="comma list: run the site-specific "
                                              "protocol once per site seed")

    p_eval = sub.add_parser("evaluate", help="greedy evaluation over the preference grid")
    p_eval.add_argument("run_dir")
    p_eval.add_argument("--lambdas", type=int, help="preference grid size")
    p_eval.add_argument("--episodes", type=int, help="episodes per preference")
    p_eval.add_argument("--workers", type=int, default=1)

    p_sim = sub.add_parser("simulate", help="agent-free simulator rollout to CSV")
    add_config_flags(p_sim)
    p_sim.add_argument("--years", type=int, default=50)
    p_sim.add_argument("--actions", default="12",
                       help="action script: one index, or comma list (one per year)")
    p_sim.add_argument("--out", required=True, help="metrics CSV path")
    p_sim.add_argument("--weather-csv", help="optional daily weather dump")
    p_sim.add_argument("--flux-trace", help="optional per-timestep flux trace CSV")
    p_sim.add_argument("--figures", action="store_true",
                       help="render diagnostic figures next to the CSV")
    p_sim.add_argument("--site-seed", dest="site_seed", type=int)
    p_sim.add_argument("--weather-seed", dest="weather_seed", type=int)
    p_sim.add_argument("--mode", choices=["generalist", "site_specific"])
    p_sim.add_argument("--dt-minutes", dest="dt_minutes", type=int)

    p_replay = sub.add_parser("replay", help="re-execute a stored episode and diff")
    p_replay.add_argument("run_dir")
    p_replay.add_argument("--episode", type=int, required=True)

    p_report = sub.add_parser("report", help="render figures for a run directory")
    p_report.add_argument("run_dir")
    return parser


def _parse_action_script(script: str, years: int) -> list[tuple[float, float]]:
    from .env import decode_action
    tokens = [tok for tok in script.split(",") if tok.strip()]
    try:
        indices = [int(tok) for tok in tokens]
    except ValueError:
        raise ConfigError(f"bad action script {script!r}: expected integer indices")
    if len(indices) == 1:
        indices = indices * years
    if len(indices) != years:
        raise ConfigError(
            f"action script length {len(indices)} does not match --years {years}")
    pairs = []
    for index in indices:
        action = decode_action(index)
        pairs.append((action.density_change, action.conifer_target))
    return pairs


def cmd_train(args) -> int:
    from .runs import run_train
    cfg = _resolve_config(args)
    out = Path(args.out)
    if args.site_seeds:
        seeds = [int(s) for s in args.site_seeds.split(",") if s.strip()]
        for seed in seeds:
            sub_cfg = dict(cfg)
            sub_cfg["site_seed"] = seed
            run_train(sub_cfg, out / f"site_{seed}")
            print(f"trained site seed {seed} -> {out / f'site_{seed}'}")
    else:
        run_train(cfg, out)
        print(f"run written to {out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .runs import run_evaluate
    eval_dir = run_evaluate(args.run_dir, args.lambdas, args.episodes,
                            workers=args.workers)
    print(f"evaluation artifacts in {eval_dir}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .report import fig_simulation
    from .runs import simulate_run
    cfg = _resolve_config(args)
    actions = _parse_action_script(args.actions, args.years)
    simulate_run(cfg, args.years, actions, args.out,
                 weather_csv=args.weather_csv, flux_trace=args.flux_trace)
    print(f"metrics written to {args.out}")
    if args.figures:
        out_png = Path(args.out).with_suffix(".png")
        fig_simulation(args.out, out_png)
        print(f"figures written to {out_png}")
    return EXIT_OK


def cmd_replay(args) -> int:
    from .runs import run_replay
    run_replay(args.run_dir, args.episode)
    print(f"episode {args.episode} replayed identically")
    return EXIT_OK


def cmd_report(args) -> int:
    from .report import render_run_report
    written = render_run_report(args.run_dir)
    if not written:
        print("nothing to render (no metrics.csv or eval artifacts)", file=sys.stderr)
        return EXIT_USAGE
    for path in written:
        print(f"wrote {path}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    handlers = {
        "train": cmd_train,
        "evaluate": cmd_evaluate,
        "simulate": cmd_simulate,
        "replay": cmd_replay,
        "report": cmd_report,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PhysicsFault as exc:
        print(f"physics fault: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except ReplayMismatch as exc:
        print(f"replay mismatch: {exc}", file=sys.stderr)
        return EXIT_REPLAY


if __name__ == "__main__":
    sys.exit(main())
