"""Figure rendering for episode and campaign reports.

Figures are written to files next to the CSV output; no interactive
backend is ever required.
"""

from __future__ import annotations

import warnings
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .harness import EpisodeLog, cumulative_rmse

ARM_COLORS = {"mhe_mpc": "tab:blue", "pid": "tab:orange",
              "open_loop": "tab:gray"}


def episode_figure(log: EpisodeLog, path, launch_duration=0.5):
    """Four-panel summary of one episode: offsets, heading, inputs, wind."""
    t = log.column("t")
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
    ax = axes[0, 0]
    ax.plot(t, log.column("true_py"), label="lateral y [m]")
    ax.plot(t, log.column("true_pz"), label="z (down) [m]")
    ax.axhline(1.5, color="k", lw=0.5, ls=":")
    ax.set_ylabel("position [m]")
    ax.legend(fontsize=8)

    ax = axes[0, 1]
    ax.plot(t, np.degrees(log.column("true_yaw")), label="yaw")
    ax.plot(t, np.degrees(log.column("true_roll")), label="roll", alpha=0.7)
    ax.plot(t, np.degrees(log.column("true_pitch")), label="pitch", alpha=0.7)
    ax.set_ylabel("attitude [deg]")
    ax.legend(fontsize=8)

    ax = axes[1, 0]
    ax.plot(t, log.column("thrust_gf"), label="thrust [gf]")
    ax.plot(t, log.column("dx_mm"), label="dx [mm]")
    ax.plot(t, log.column("dy_mm"), label="dy [mm]")
    ax.set_ylabel("inputs")
    ax.set_xlabel("t [s]")
    ax.legend(fontsize=8)

    ax = axes[1, 1]
    for comp, style in (("x", "-"), ("y", "--"), ("z", ":")):
        ax.plot(t, log.column(f"wind_true_{comp}"), "k" + style, alpha=0.5,
                label=f"true {comp}")
        est = log.column(f"wind_est_{comp}")
        if np.any(np.isfinite(est)):
            ax.plot(t, est, "C0" + style, label=f"est {comp}")
    ax.set_ylabel("wind [m/s]")
    ax.set_xlabel("t [s]")
    ax.legend(fontsize=7, ncol=2)

    meta = log.meta
    fig.suptitle(f"{meta.get('scenario', '?')} / {meta.get('arm', '?')} "
                 f"(seed {meta.get('seed', '?')}, {meta.get('termination', '?')})")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def _binned_mean(x, v, edges):
    idx = np.digitize(x, edges) - 1
    out = np.full(len(edges) - 1, np.nan)
    for b in range(len(edges) - 1):
        sel = idx == b
        if np.any(sel):
            out[b] = np.mean(v[sel])
    return out


def campaign_traces_figure(scenario_name, logs_by_arm, path,
                           launch_duration=0.5):
    """Mean and spread of y, yaw and estimated wind along the forward path."""
    edges = np.linspace(0.0, 6.0, 41)
    centers = 0.5 * (edges[:-1] + edges[1:])
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    for arm, logs in logs_by_arm.items():
        color = ARM_COLORS.get(arm, None)
        ys, yaws, winds = [], [], []
        for log in logs:
            x = log.column("true_px")
            ys.append(_binned_mean(x, log.column("true_py"), edges))
            yaws.append(_binned_mean(x, np.degrees(log.column("true_yaw")),
                                     edges))
            west = log.rows[:, [log.columns.index("wind_est_x"),
                                log.columns.index("wind_est_y")]]
            mag = np.linalg.norm(west, axis=1)
            winds.append(_binned_mean(x, mag, edges))
        for ax, series, label in ((axes[0], ys, "lateral y [m]"),
                                  (axes[1], yaws, "yaw [deg]"),
                                  (axes[2], winds, "|wind est| (xy) [m/s]")):
            arr = np.array(series)
            with warnings.catch_warnings():
                # bins no trial visited stay NaN and are simply not drawn
                warnings.simplefilter("ignore", RuntimeWarning)
                mean = np.nanmean(arr, axis=0)
                std = np.nanstd(arr, axis=0)
            ax.plot(centers, mean, color=color, label=arm)
            ax.fill_between(centers, mean - std, mean + std, color=color,
                            alpha=0.2)
            ax.set_ylabel(label)
    axes[0].axhline(2.0, color="r", lw=0.5, ls="--")
    axes[0].axhline(-2.0, color="r", lw=0.5, ls="--")
    axes[2].set_xlabel("forward distance x [m]")
    axes[0].legend(fontsize=8)
    fig.suptitle(f"{scenario_name}: traces along the forward path")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def campaign_crmse_figure(summary_rows, path):
    """Bar chart of final cumulative RMSE per scenario and arm."""
    scenarios = sorted({r["scenario"] for r in summary_rows})
    arms = sorted({r["arm"] for r in summary_rows})
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    width = 0.8 / max(len(arms), 1)
    for j, (key, label) in enumerate((("mean_crmse_y", "cRMSE y [m]"),
                                      ("mean_crmse_yaw", "cRMSE yaw [rad]"))):
        ax = axes[j]
        for i, arm in enumerate(arms):
            vals, errs = [], []
            for s in scenarios:
                row = next((r for r in summary_rows
                            if r["scenario"] == s and r["arm"] == arm), None)
                vals.append(row[key] if row else np.nan)
                errs.append(row["std" + key[4:]] if row else np.nan)
            xpos = np.arange(len(scenarios)) + (i - (len(arms) - 1) / 2) * width
            ax.bar(xpos, vals, width=width, yerr=errs, capsize=3,
                   color=ARM_COLORS.get(arm), label=arm)
        ax.set_xticks(np.arange(len(scenarios)))
        ax.set_xticklabels([Path(str(s)).stem for s in scenarios],
                           rotation=20, ha="right", fontsize=8)
        ax.set_ylabel(label)
    axes[0].legend(fontsize=8)
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def render_campaign_figures(cells, out_dir):
    """All campaign figures: per-scenario traces plus the cRMSE bars."""
    out_dir = Path(out_dir)
    summary_rows = [c.summary_row() for c in cells]
    paths = [campaign_crmse_figure(summary_rows, out_dir / "fig_crmse.png")]
    by_scenario = {}
    for cell in cells:
        by_scenario.setdefault(cell.scenario, {})[cell.arm] = [
            EpisodeLog.from_csv(r["log_path"]) for r in cell.completed()
            if r.get("log_path")]
    for scenario, logs_by_arm in by_scenario.items():
        if not any(logs_by_arm.values()):
            continue
        name = Path(str(scenario)).stem
        paths.append(campaign_traces_figure(
            name, logs_by_arm, out_dir / f"fig_{name}_traces.png"))
    return paths
