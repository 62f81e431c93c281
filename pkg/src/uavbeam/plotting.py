"""PNG figures for the report tables (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .harness import Aggregate  # noqa: E402
from .initial_access import SCHEMES  # noqa: E402

STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "legend.fontsize": 8,
    "font.size": 10,
}


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_weights(aggs: Sequence[Aggregate], path: Path) -> Path:
    fig, ax = plt.subplots()
    for a in aggs:
        slots = np.arange(a.weights.shape[0])
        ax.plot(slots, a.weights[:, 0], label=f"position, N_t={a.n_t}")
        ax.plot(slots, a.weights[:, 1], "--", label=f"velocity, N_t={a.n_t}")
        ax.axvline(a.closest_slot, color="0.6", lw=0.8)
    ax.set_xlabel("slot")
    ax.set_ylabel("normalised weight")
    ax.legend()
    return _save(fig, path)


def plot_angle_error(aggs: Sequence[Aggregate], path: Path) -> Path:
    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), sharex=True)
    for a in aggs:
        slots = np.arange(a.angle_rmse.shape[2])
        for j, angle in enumerate(("azimuth", "elevation")):
            axes[j].semilogy(slots, a.angle_rmse[0, j], label=f"ISAC, N_t={a.n_t}")
            axes[j].semilogy(slots, a.angle_rmse[1, j], "--", label=f"feedback, N_t={a.n_t}")
            axes[j].set_title(angle)
    for ax in axes:
        ax.set_xlabel("slot")
        ax.legend()
    axes[0].set_ylabel("RMSE (rad)")
    return _save(fig, path)


def plot_rates(aggs: Sequence[Aggregate], path: Path) -> Path:
    fig, ax = plt.subplots()
    for a in aggs:
        slots = np.arange(a.rates.shape[1])
        for s, name in enumerate(a.schemes):
            if name.startswith("dia:") and name != a.schemes[3]:
                continue
            label = "DIA" if name.startswith("dia:") else name
            ax.plot(slots, a.rates[s], label=f"{label}, N_t={a.n_t}")
    ax.set_xlabel("slot")
    ax.set_ylabel("average rate (bits/s/Hz)")
    ax.legend(ncol=2)
    return _save(fig, path)


def plot_accuracy(aggs: Sequence[Aggregate], path: Path) -> Path:
    fig, ax = plt.subplots()
    for a in aggs:
        slots = np.arange(a.accuracy.shape[1])
        for i, label in enumerate(a.variants):
            ax.plot(slots, a.accuracy[i], label=f"{label}, N_t={a.n_t}")
    ax.set_xlabel("slot")
    ax.set_ylabel("matching accuracy")
    ax.set_ylim(0, 1.02)
    ax.legend(fontsize=7)
    return _save(fig, path)


def plot_ia_delay(ia_rows: List[Dict], path: Path) -> Path:
    fig, ax = plt.subplots()
    diag = [r for r in ia_rows if r["Q_B"] == r["Q_U"]]
    q = [r["Q_B"] for r in diag]
    for s in SCHEMES:
        ax.semilogy(q, [r[f"{s}_ms"] for r in diag], marker="o", label=s)
    ax.set_xlabel("Q_B = Q_U")
    ax.set_ylabel("IA delay (ms)")
    ax.legend()
    return _save(fig, path)


def render_figures(aggs: Sequence[Aggregate], ia_rows: List[Dict], out_dir) -> Dict[str, Path]:
    out = Path(out_dir)
    paths: Dict[str, Path] = {}
    with plt.rc_context(STYLE):
        if aggs:
            paths["fig_weights"] = plot_weights(aggs, out / "weights.png")
            paths["fig_angle_error"] = plot_angle_error(aggs, out / "angle_error.png")
            paths["fig_rates"] = plot_rates(aggs, out / "rates.png")
            paths["fig_accuracy"] = plot_accuracy(aggs, out / "matching_accuracy.png")
        if ia_rows:
            paths["fig_ia_delay"] = plot_ia_delay(ia_rows, out / "ia_delay.png")
    return paths
