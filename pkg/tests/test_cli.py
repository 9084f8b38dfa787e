import json
from pathlib import Path

import pytest

from permaforest.cli import main
from permaforest.runs import read_csv

FAST = ["--set", "episode_length=6", "--set", "dt_minutes=180",
        "--set", "eupg_batch_episodes=4", "--set", "checkpoint_every=8"]


def train_args(out, extra=None):
    return ["train", "--out", str(out), "--algorithm", "eupg_fixed",
            "--mode", "site_specific", "--timesteps", "120",
            "--fixed-lambda", "1.0", *FAST, *(extra or [])]


def test_train_twice_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(train_args(a)) == 0
    assert main(train_args(b)) == 0
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
    assert (a / "episodes.csv").read_bytes() == (b / "episodes.csv").read_bytes()


def test_manifest_reflects_overrides(tmp_path):
    out = tmp_path / "run"
    assert main(train_args(out)) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["timesteps"] == 120
    assert manifest["config"]["episode_length"] == 6
    assert manifest["config"]["algorithm"] == "eupg_fixed"
    assert (out / "checkpoints" / "final.npz").exists()


def test_missing_config_file_fails_before_creating_a_run(tmp_path):
    out = tmp_path / "never"
    code = main(["train", "--out", str(out), "--config", str(tmp_path / "nope.cfg")])
    assert code == 2
    assert not out.exists()


def test_unknown_config_key_names_the_key(tmp_path, capsys):
    code = main(["train", "--out", str(tmp_path / "x"), "--set", "not_a_key=1"])
    assert code == 2
    assert "not_a_key" in capsys.readouterr().err


def test_bad_config_value_rejected(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("latitude = 90\n")
    code = main(["train", "--out", str(tmp_path / "x"), "--config", str(cfg)])
    assert code == 2


def test_config_file_round_trip(tmp_path):
    cfg = tmp_path / "ok.cfg"
    cfg.write_text("# pins\nlatitude = 60.0\nepisode_length = 4\ndt_minutes = 180\n"
                   "eupg_batch_episodes = 2\n")
    out = tmp_path / "run"
    code = main(["train", "--out", str(out), "--config", str(cfg),
                 "--algorithm", "eupg_fixed", "--mode", "site_specific",
                 "--timesteps", "40"])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["latitude"] == 60.0


def test_simulate_row_count_and_determinism(tmp_path):
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["simulate", "--years", "1", "--actions", "12", "--mode", "site_specific",
            "--dt-minutes", "180"]
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    header, rows = read_csv(out1)
    assert len(rows) == 1
    assert out1.read_bytes() == out2.read_bytes()


def test_simulate_conservation_columns(tmp_path):
    out = tmp_path / "sim.csv"
    assert main(["simulate", "--years", "10", "--actions", "22", "--mode",
                 "site_specific", "--dt-minutes", "60", "--out", str(out)]) == 0
    header, rows = read_csv(out)
    wi = header.index("water_closure_residual")
    ci = header.index("carbon_closure_residual")
    gi = header.index("gpp")
    for row in rows:
        assert abs(float(row[wi])) < 1e-6
        assert abs(float(row[ci])) / max(1.0, float(row[gi])) < 1e-9


def test_simulate_action_script_validation(tmp_path):
    code = main(["simulate", "--years", "3", "--actions", "12,13",
                 "--out", str(tmp_path / "x.csv")])
    assert code == 2


def test_simulate_optional_dumps(tmp_path):
    out = tmp_path / "sim.csv"
    weather = tmp_path / "weather.csv"
    trace = tmp_path / "trace.csv"
    assert main(["simulate", "--years", "1", "--actions", "12", "--dt-minutes", "180",
                 "--out", str(out), "--weather-csv", str(weather),
                 "--flux-trace", str(trace), "--figures"]) == 0
    wh, wrows = read_csv(weather)
    assert len(wrows) == 365
    th, trows = read_csv(trace)
    assert len(trows) == 365 * 8
    assert out.with_suffix(".png").stat().st_size > 0


def test_evaluate_writes_all_artifacts(tmp_path):
    out = tmp_path / "run"
    assert main(train_args(out)) == 0
    assert main(["evaluate", str(out), "--lambdas", "3", "--episodes", "2"]) == 0
    eval_dir = out / "eval"
    for name in ("tradeoff.csv", "pareto.json", "monotonicity.json", "strategy.csv"):
        assert (eval_dir / name).exists(), name
    header, rows = read_csv(eval_dir / "strategy.csv")
    pi = header.index("policy")
    trained = [r for r in rows if r[pi] == "eupg_fixed"]
    # steps = horizon x episodes x grid points
    assert len(trained) == 6 * 2 * 3
    mono = json.loads((eval_dir / "monotonicity.json").read_text())
    assert "eupg_fixed" in mono["violation_fraction"]
    assert "baseline_noop" in mono["violation_fraction"]
    pareto = json.loads((eval_dir / "pareto.json").read_text())
    assert {"carbon_return", "thaw_return", "lambda", "policy", "dominated"} <= set(
        pareto["points"][0])


def test_evaluate_rejects_degenerate_grid(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(train_args(out)) == 0
    assert main(["evaluate", str(out), "--lambdas", "1"]) == 2


def test_evaluate_workers_do_not_change_results(tmp_path):
    out = tmp_path / "run"
    assert main(train_args(out)) == 0
    assert main(["evaluate", str(out), "--lambdas", "3", "--episodes", "1",
                 "--workers", "1"]) == 0
    serial = (out / "eval" / "tradeoff.csv").read_bytes()
    assert main(["evaluate", str(out), "--lambdas", "3", "--episodes", "1",
                 "--workers", "2"]) == 0
    assert (out / "eval" / "tradeoff.csv").read_bytes() == serial


def test_evaluate_twice_identical(tmp_path):
    out = tmp_path / "run"
    assert main(train_args(out)) == 0
    assert main(["evaluate", str(out), "--lambdas", "2", "--episodes", "1"]) == 0
    first = (out / "eval" / "tradeoff.csv").read_bytes()
    assert main(["evaluate", str(out), "--lambdas", "2", "--episodes", "1"]) == 0
    assert (out / "eval" / "tradeoff.csv").read_bytes() == first


def test_replay_roundtrip_and_tamper_detection(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(train_args(out)) == 0
    assert main(["replay", str(out), "--episode", "3"]) == 0

    episodes = out / "episodes.csv"
    text = episodes.read_text()
    lines = text.splitlines()
    parts = lines[4].split(",")
    parts[-1] = "123.0"
    lines[4] = ",".join(parts)
    episodes.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(out), "--episode", "3"]) == 4
    assert "row 5" in capsys.readouterr().err
    episodes.write_text(text)
    assert main(["replay", str(out), "--episode", "3"]) == 0


def test_replay_unknown_episode(tmp_path):
    out = tmp_path / "run"
    assert main(train_args(out)) == 0
    assert main(["replay", str(out), "--episode", "9999"]) == 4


def test_report_renders_figures(tmp_path):
    out = tmp_path / "run"
    assert main(train_args(out)) == 0
    assert main(["evaluate", str(out), "--lambdas", "2", "--episodes", "1"]) == 0
    assert main(["report", str(out)]) == 0
    report = out / "report"
    for name in ("learning_curve.png", "tradeoff.png", "pareto.png", "strategy.png"):
        path = report / name
        assert path.exists() and path.stat().st_size > 1000, name


def test_report_on_empty_directory_is_a_usage_error(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", str(empty)]) == 1


PPO_FAST = ["--set", "episode_length=4", "--set", "dt_minutes=180",
            "--set", "ppo_rollout_steps=128", "--set", "ppo_update_epochs=2"]


def test_ppo_gated_run_end_to_end(tmp_path):
    out = tmp_path / "ppo"
    code = main(["train", "--out", str(out), "--algorithm", "ppo_gated",
                 "--mode", "site_specific", "--timesteps", "256", *PPO_FAST])
    assert code == 0
    assert (out / "checkpoints" / "final.npz").exists()
    assert main(["evaluate", str(out), "--lambdas", "2", "--episodes", "1"]) == 0
    header, rows = read_csv(out / "eval" / "tradeoff.csv")
    assert any(r[0] == "ppo_gated" for r in rows)
    assert main(["replay", str(out), "--episode", "0"]) == 0


def test_curriculum_run_end_to_end(tmp_path):
    out = tmp_path / "curr"
    code = main(["train", "--out", str(out), "--algorithm", "curriculum_ppo",
                 "--mode", "generalist", "--timesteps", "256", *PPO_FAST])
    assert code == 0
    assert (out / "checkpoints" / "selector_final.npz").exists()
    header, rows = read_csv(out / "metrics.csv")
    assert rows, "training produced no completed episodes"
    # replay one of the logged (accepted) episodes by its environment index
    eh, erows = read_csv(out / "episodes.csv")
    episode = int(erows[0][0])
    assert main(["replay", str(out), "--episode", str(episode)]) == 0


def test_curriculum_requires_generalist_mode(tmp_path):
    code = main(["train", "--out", str(tmp_path / "x"), "--algorithm",
                 "curriculum_ppo", "--mode", "site_specific",
                 "--timesteps", "64", *PPO_FAST])
    assert code == 2


def test_site_seed_protocol_creates_one_run_per_seed(tmp_path):
    out = tmp_path / "multi"
    code = main(["train", "--out", str(out), "--algorithm", "eupg_fixed",
                 "--mode", "site_specific", "--timesteps", "24", *FAST,
                 "--site-seeds", "1,2"])
    assert code == 0
    for seed in (1, 2):
        sub = out / f"site_{seed}"
        assert (sub / "manifest.json").exists()
        assert json.loads((sub / "manifest.json").read_text())["config"]["site_seed"] == seed


def test_usage_error_exit_code():
    assert main(["no-such-command"]) == 1
