"""Report figures rendered alongside the delimited outputs.

All figures are written through one helper with fixed size, dpi, and PNG
metadata so repeated runs produce byte-identical files.
"""

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .gold import CorpusStats  # noqa: E402

STYLE_ORDER = ["self_negative", "self_positive", "other_negative", "other_positive"]
STYLE_COLORS = {
    "self_negative": "#b2182b",
    "self_positive": "#2166ac",
    "other_negative": "#ef8a62",
    "other_positive": "#67a9cf",
}


def save_figure(fig, path: Path) -> None:
    fig.savefig(path, dpi=150, metadata={"Software": "humorkit"})
    plt.close(fig)


def agreement_heatmap(
    coaches: list[str], annotators: list[str], matrix: np.ndarray, path: Path
) -> None:
    """Mean pairwise-alpha heatmap, coaches on the y axis, raters on the x axis."""
    fig, ax = plt.subplots(figsize=(1.0 + 0.6 * len(annotators), 1.0 + 0.45 * len(coaches)))
    masked = np.ma.masked_invalid(matrix)
    im = ax.imshow(masked, aspect="auto", cmap="viridis")
    ax.set_xticks(range(len(annotators)), annotators, rotation=45, ha="right")
    ax.set_yticks(range(len(coaches)), coaches)
    ax.set_xlabel("annotator")
    ax.set_ylabel("coach")
    ax.set_title("Mean pairwise agreement on binary humor")
    fig.colorbar(im, ax=ax, label="mean pairwise alpha")
    fig.tight_layout()
    save_figure(fig, path)


def humor_style_bars(stats: CorpusStats, path: Path) -> None:
    """Per-coach humorous-segment share, stacked by humor style."""
    coaches = sorted(stats.per_coach_humor_rate)
    fig, ax = plt.subplots(figsize=(1.5 + 0.7 * len(coaches), 4.0))
    bottom = np.zeros(len(coaches))
    rates = np.array([stats.per_coach_humor_rate[c] for c in coaches])
    shares = {name: np.zeros(len(coaches)) for name in STYLE_ORDER}
    for i, coach in enumerate(coaches):
        for name in STYLE_ORDER:
            value = stats.per_coach_style_shares.get(coach, {}).get(name, float("nan"))
            shares[name][i] = 0.0 if not np.isfinite(value) else value * rates[i]
    for name in STYLE_ORDER:
        ax.bar(coaches, 100.0 * shares[name], bottom=100.0 * bottom,
               label=name.replace("_", "/"), color=STYLE_COLORS[name])
        bottom += shares[name]
    ax.set_ylabel("humorous segments [%]")
    ax.set_xlabel("coach")
    ax.set_title("Humor share per coach by style")
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(fig, path)


def auc_by_coach(per_source_coach_mean: dict[str, dict[str, float]], path: Path) -> None:
    """Grouped bars of per-coach mean AUC for each prediction source."""
    sources = sorted(per_source_coach_mean)
    coaches = sorted({c for per in per_source_coach_mean.values() for c in per})
    x = np.arange(len(coaches), dtype=np.float64)
    width = 0.8 / max(1, len(sources))
    fig, ax = plt.subplots(figsize=(1.5 + 0.8 * len(coaches), 4.0))
    for i, source in enumerate(sources):
        values = [per_source_coach_mean[source].get(c, np.nan) for c in coaches]
        ax.bar(x + (i - (len(sources) - 1) / 2.0) * width, values, width, label=source)
    ax.axhline(0.5, color="grey", linestyle="--", linewidth=1)
    ax.set_xticks(x, coaches)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("mean AUC")
    ax.set_xlabel("held-out coach")
    ax.set_title("Test AUC per held-out coach")
    ax.legend(fontsize=8)
    fig.tight_layout()
    save_figure(fig, path)


def training_curves(history: list[dict], path: Path) -> None:
    """Train loss and dev AUC per epoch from a training history."""
    epochs = [h["epoch"] for h in history]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8.0, 3.2))
    ax1.plot(epochs, [h["train_loss"] for h in history], marker="o")
    ax1.set_xlabel("epoch")
    ax1.set_ylabel("train BCE")
    ax2.plot(epochs, [h["dev_auc"] for h in history], marker="o", color="#2166ac")
    ax2.set_xlabel("epoch")
    ax2.set_ylabel("dev AUC")
    ax2.set_ylim(0.0, 1.05)
    fig.tight_layout()
    save_figure(fig, path)
