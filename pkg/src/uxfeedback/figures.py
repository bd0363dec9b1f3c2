"""Matplotlib rendering of report figures to files.

Uses the Agg backend and fixed PNG metadata so repeated runs of the same
pipeline produce byte-identical images.
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_GROUP_STYLE = {
    "Negative": {"color": "#c0392b", "linestyle": "-"},
    "Mixed": {"color": "#f39c12", "linestyle": "--"},
    "Positive": {"color": "#27ae60", "linestyle": "-."},
}


def save_cumulative_frequency_figure(
    curves: dict[str, list[float]],
    grid: Sequence[float],
    title: str,
    xlabel: str,
    path: str | Path,
) -> None:
    """One cumulative step curve per group over the score grid."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for group, fractions in curves.items():
        style = _GROUP_STYLE.get(group, {})
        ax.plot(grid, fractions, drawstyle="steps-post", label=group, **style)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("Cumulative frequency")
    ax.set_title(title)
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper left")
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)


def save_label_share_figure(
    shares: dict[str, float],
    title: str,
    path: str | Path,
) -> None:
    """Horizontal bars of per-label comment shares (percent)."""
    labels = list(shares)
    values = [shares[lab] for lab in labels]
    fig, ax = plt.subplots(figsize=(6.4, 0.4 * max(4, len(labels)) + 1.2))
    positions = range(len(labels))[::-1]
    ax.barh(list(positions), values, color="#2e86c1")
    ax.set_yticks(list(positions))
    ax.set_yticklabels(labels)
    ax.set_xlabel("Share of comments (%)")
    ax.set_title(title)
    for pos, value in zip(positions, values):
        ax.text(value, pos, f" {value:.2f}%", va="center", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
