"""Figure rendering and text summaries written alongside the CSV output.

All figures go through the Agg backend so runs work headless; every function
writes files and returns the paths it created.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .config import ScenarioConfig
from .sim import SummaryMetrics, Trajectory


def receiver_tracks(tr: Trajectory, d: float) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Receiver paths reconstructed from the center track and heading."""
    ox = -0.5 * d * np.sin(tr.psi)
    oy = 0.5 * d * np.cos(tr.psi)
    return tr.x_c + ox, tr.y_c + oy, tr.x_c - ox, tr.y_c - oy


def save_run_figures(tr: Trajectory, cfg: ScenarioConfig, outdir: Path) -> list[Path]:
    """Render the trajectory, range, and command time-series figures."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    d = cfg.baseline.d
    sx, sy, depth = cfg.source.x, cfg.source.y, cfg.source.depth
    p1x, p1y, p2x, p2y = receiver_tracks(tr, d)
    paths = []

    fig, ax = plt.subplots(figsize=(6.0, 6.0))
    ax.plot(tr.y_c, tr.x_c, "-", lw=1.2, label="baseline center")
    ax.plot(p1y, p1x, "--", lw=0.8, label="receiver 1")
    ax.plot(p2y, p2x, ":", lw=0.8, label="receiver 2")
    ax.plot(sy, sx, "rx", ms=10, mew=2, label="source")
    ax.plot(tr.y_c[0], tr.x_c[0], "g^", ms=8, label="start")
    ax.set_xlabel("east y (m)")
    ax.set_ylabel("north x (m)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    path = outdir / "trajectory.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    r1 = np.sqrt((p1x - sx) ** 2 + (p1y - sy) ** 2 + depth**2)
    r2 = np.sqrt((p2x - sx) ** 2 + (p2y - sy) ** 2 + depth**2)
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.plot(tr.t, tr.r_c, "-", lw=1.2, label="center range")
    ax.plot(tr.t, r1, "--", lw=0.8, label="receiver 1 slant range")
    ax.plot(tr.t, r2, ":", lw=0.8, label="receiver 2 slant range")
    ax.set_xlabel("t (s)")
    ax.set_ylabel("range (m)")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best", fontsize=8)
    path = outdir / "range.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)

    fig, axes = plt.subplots(3, 1, figsize=(7.0, 7.5), sharex=True)
    axes[0].plot(tr.t, tr.alpha, lw=0.8)
    axes[0].set_ylabel("relative angle (rad)")
    axes[1].plot(tr.t, tr.f, lw=0.8)
    axes[1].set_ylabel("cost")
    axes[2].plot(tr.t, tr.u_c, lw=0.8)
    axes[2].set_ylabel("surge (m/s)")
    axes[2].set_xlabel("t (s)")
    for ax in axes:
        ax.grid(True, alpha=0.3)
    path = outdir / "timeseries.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    paths.append(path)
    return paths


def format_summary(m: SummaryMetrics, extra: Optional[dict] = None) -> str:
    """Line-oriented ``key = value`` summary of one run."""
    items: dict[str, object] = dict(extra or {})
    items.update(
        {
            "end_reason": m.end_reason,
            "reached_target": m.reached_target,
            "duration": f"{m.duration:.9g}",
            "final_range": f"{m.final_range:.9g}",
            "range_threshold": f"{m.range_threshold:.9g}",
            "time_to_range": "none" if m.time_to_range is None else f"{m.time_to_range:.9g}",
            "mean_abs_u": f"{m.mean_abs_u:.9g}",
            "sign_flips": m.sign_flips,
            "path_length": f"{m.path_length:.9g}",
            "success": m.success,
        }
    )
    return "\n".join(f"{key} = {value}" for key, value in items.items()) + "\n"


def save_sweep_figure(
    cell_labels: list[str],
    success_fractions: list[float],
    median_times: list[Optional[float]],
    outdir: Path,
) -> Path:
    """Bar chart of per-cell success fraction with median time-to-threshold overlay."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    idx = np.arange(len(cell_labels))
    fig, ax = plt.subplots(figsize=(max(6.0, 1.2 * len(cell_labels)), 4.0))
    ax.bar(idx, success_fractions, color="tab:blue", alpha=0.6, label="success fraction")
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("success fraction")
    ax.set_xticks(idx)
    ax.set_xticklabels(cell_labels, rotation=30, ha="right", fontsize=8)
    ax2 = ax.twinx()
    times = [math.nan if t is None else t for t in median_times]
    ax2.plot(idx, times, "ko-", ms=4, label="median time to threshold")
    ax2.set_ylabel("median time to threshold (s)")
    fig.legend(loc="upper right", fontsize=8)
    path = outdir / "sweep.png"
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path
