"""Figure rendering for run directories and simulator output.

Every figure is written next to the CSV/JSON it was computed from; nothing
here feeds back into training or evaluation.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .runs import read_csv

POLICY_COLORS = {
    "baseline_noop": "tab:gray",
    "baseline_plant": "tab:olive",
}


def _color(policy: str):
    return POLICY_COLORS.get(policy, "tab:blue")


def _smooth(values: np.ndarray, window: int = 25) -> np.ndarray:
    if len(values) < window:
        return values
    kernel = np.ones(window) / window
    return np.convolve(values, kernel, mode="valid")


def fig_learning_curve(metrics_csv, out_png) -> Path:
    header, rows = read_csv(metrics_csv)
    idx = {name: i for i, name in enumerate(header)}
    steps = np.array([float(r[idx["step"]]) for r in rows])
    scal = np.array([float(r[idx["scalarized_return"]]) for r in rows])
    carbon = np.array([float(r[idx["carbon_return"]]) for r in rows])
    thaw = np.array([float(r[idx["thaw_return"]]) for r in rows])

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    axes[0].plot(steps, scal, alpha=0.25, color="tab:blue")
    if len(scal) >= 25:
        axes[0].plot(steps[24:], _smooth(scal), color="tab:blue", label="smoothed")
        axes[0].legend()
    axes[0].set_xlabel("environment steps")
    axes[0].set_ylabel("scalarized episode return")
    axes[0].set_title("Learning curve")
    axes[1].plot(steps, carbon, alpha=0.3, color="tab:green", label="carbon")
    axes[1].plot(steps, thaw, alpha=0.3, color="tab:red", label="thaw")
    axes[1].set_xlabel("environment steps")
    axes[1].set_ylabel("objective episode return")
    axes[1].legend()
    axes[1].set_title("Per-objective returns")
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return Path(out_png)


def fig_tradeoff(tradeoff_csv, out_png) -> Path:
    header, rows = read_csv(tradeoff_csv)
    idx = {name: i for i, name in enumerate(header)}
    fig, ax = plt.subplots(figsize=(6, 5))
    policies = sorted({r[idx["policy"]] for r in rows})
    for policy in policies:
        sub = [r for r in rows if r[idx["policy"]] == policy]
        x = [float(r[idx["carbon_return"]]) for r in sub]
        y = [float(r[idx["thaw_return"]]) for r in sub]
        ax.scatter(x, y, s=14, alpha=0.6, label=policy, color=_color(policy))
    ax.set_xlabel("carbon return")
    ax.set_ylabel("thaw return")
    ax.set_title("Carbon-thaw trade-off")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return Path(out_png)


def fig_pareto(pareto_json, out_png) -> Path:
    payload = json.loads(Path(pareto_json).read_text())
    points = payload["points"]
    fig, ax = plt.subplots(figsize=(6, 5))
    policies = sorted({p["policy"] for p in points})
    for policy in policies:
        sub = [p for p in points if p["policy"] == policy]
        dom = [p for p in sub if p["dominated"]]
        nondom = sorted((p for p in sub if not p["dominated"]),
                        key=lambda p: p["carbon_return"])
        if dom:
            ax.scatter([p["carbon_return"] for p in dom], [p["thaw_return"] for p in dom],
                       s=18, alpha=0.35, marker="x", color=_color(policy))
        if nondom:
            ax.plot([p["carbon_return"] for p in nondom],
                    [p["thaw_return"] for p in nondom],
                    marker="o", markersize=5, label=f"{policy} front", color=_color(policy))
    ax.set_xlabel("mean carbon return")
    ax.set_ylabel("mean thaw return")
    ax.set_title("Pareto front (per-preference means)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return Path(out_png)


def fig_strategy(strategy_csv, out_png) -> Path:
    header, rows = read_csv(strategy_csv)
    idx = {name: i for i, name in enumerate(header)}
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    policies = sorted({r[idx["policy"]] for r in rows})
    for policy in policies:
        sub = [r for r in rows if r[idx["policy"]] == policy]
        years = sorted({int(r[idx["year"]]) for r in sub})
        dens = [np.mean([float(r[idx["density"]]) for r in sub
                         if int(r[idx["year"]]) == y]) for y in years]
        cf = [np.mean([float(r[idx["conifer_fraction"]]) for r in sub
                       if int(r[idx["year"]]) == y]) for y in years]
        axes[0].plot(years, dens, label=policy, color=_color(policy))
        axes[1].plot(years, cf, label=policy, color=_color(policy))
    axes[0].set_xlabel("year")
    axes[0].set_ylabel("stem density (stems/ha)")
    axes[0].set_title("Density trajectory (mean over episodes)")
    axes[1].set_xlabel("year")
    axes[1].set_ylabel("conifer fraction")
    axes[1].set_title("Species mix trajectory")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return Path(out_png)


def fig_simulation(metrics_csv, out_png) -> Path:
    """Annual diagnostics for an agent-free simulator rollout."""
    header, rows = read_csv(metrics_csv)
    idx = {name: i for i, name in enumerate(header)}
    years = [int(r[idx["year"]]) for r in rows]

    def col(name):
        return [float(r[idx[name]]) for r in rows]

    fig, axes = plt.subplots(2, 2, figsize=(11, 7))
    axes[0, 0].plot(years, col("density"), color="tab:green")
    axes[0, 0].set_title("Stem density")
    axes[0, 0].set_ylabel("stems/ha")
    axes[0, 1].plot(years, col("biomass_carbon"), label="biomass")
    axes[0, 1].plot(years, col("soil_carbon"), label="soil")
    axes[0, 1].plot(years, col("hwp_cumulative"), label="HWP (cum.)")
    axes[0, 1].set_title("Carbon pools")
    axes[0, 1].set_ylabel("kgC/m$^2$")
    axes[0, 1].legend(fontsize=8)
    axes[1, 0].plot(years, col("f_p"), label="warming $f_p$", color="tab:red")
    axes[1, 0].plot(years, col("f_n"), label="cooling $f_n$", color="tab:blue")
    axes[1, 0].set_title("Permafrost boundary flux integrals")
    axes[1, 0].set_ylabel("degC-day equivalents")
    axes[1, 0].legend(fontsize=8)
    axes[1, 1].plot(years, col("r_carbon"), label="$r_{carbon}$")
    axes[1, 1].plot(years, col("r_thaw"), label="$r_{thaw}$")
    axes[1, 1].set_title("Reward components")
    axes[1, 1].legend(fontsize=8)
    for ax in axes.flat:
        ax.set_xlabel("year")
    fig.tight_layout()
    fig.savefig(out_png, dpi=130)
    plt.close(fig)
    return Path(out_png)


def render_run_report(run_dir) -> list[Path]:
    """Render every figure the run's artifacts support into run_dir/report/."""
    run_dir = Path(run_dir)
    out_dir = run_dir / "report"
    out_dir.mkdir(exist_ok=True)
    written = []
    metrics = run_dir / "metrics.csv"
    if metrics.exists():
        written.append(fig_learning_curve(metrics, out_dir / "learning_curve.png"))
    eval_dir = run_dir / "eval"
    if (eval_dir / "tradeoff.csv").exists():
        written.append(fig_tradeoff(eval_dir / "tradeoff.csv", out_dir / "tradeoff.png"))
    if (eval_dir / "pareto.json").exists():
        written.append(fig_pareto(eval_dir / "pareto.json", out_dir / "pareto.png"))
    if (eval_dir / "strategy.csv").exists():
        written.append(fig_strategy(eval_dir / "strategy.csv", out_dir / "strategy.png"))
    return written
