"""Static chart files for analysis outputs. No interactive surface."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .analysis import CompositionTimeline, LossSeries

_SAVE_KW = {"dpi": 120, "metadata": {"Software": None}}


def plot_composition(timeline: CompositionTimeline, title: str, path: str | Path) -> None:
    """Stacked stage shares over training segments."""
    fig, ax = plt.subplots(figsize=(8, 3))
    x = np.arange(timeline.n_segments)
    ax.stackplot(x, timeline.shares.T, labels=timeline.stages)
    ax.set_xlim(0, max(1, timeline.n_segments - 1))
    ax.set_ylim(0, 1)
    ax.set_xlabel("segment")
    ax.set_ylabel("stage share (words)")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize="small", ncol=len(timeline.stages))
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_jsd_table(names: list[str], matrix: np.ndarray, path: str | Path) -> None:
    """Heat table of pairwise mean divergences between curricula."""
    fig, ax = plt.subplots(figsize=(1.2 + 0.6 * len(names), 1.0 + 0.6 * len(names)))
    im = ax.imshow(matrix, cmap="viridis")
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right", fontsize="small")
    ax.set_yticks(range(len(names)), names, fontsize="small")
    for i in range(len(names)):
        for j in range(len(names)):
            ax.text(j, i, f"{matrix[i, j]:.3f}", ha="center", va="center", fontsize=7, color="w")
    fig.colorbar(im, ax=ax, label="mean JSD (nats)")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)


def plot_loss(series: LossSeries, ratios: np.ndarray, path: str | Path) -> None:
    """Loss curve with the running-min ratio on a twin axis."""
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(series.steps, series.losses, color="tab:blue", label="loss")
    ax.set_xlabel("step")
    ax.set_ylabel("loss", color="tab:blue")
    ax2 = ax.twinx()
    ax2.plot(series.steps, ratios, color="tab:red", alpha=0.7, label="loss ratio")
    ax2.set_ylabel("loss ratio", color="tab:red")
    ax2.axhline(1.0, color="tab:red", linestyle=":", linewidth=0.8)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
