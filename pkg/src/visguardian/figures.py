"""Report figures rendered next to the delimited outputs.

matplotlib is imported lazily with the Agg backend so headless runs and
fast CLI paths never pay for a display stack.
"""

from __future__ import annotations

from pathlib import Path
from typing import List, Sequence, Union


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_latency_figure(rows: Sequence[dict], path: Union[str, Path]):
    """Per-stage latency over frames, written as a PNG."""
    plt = _plt()
    frames = [row["frame"] for row in rows]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    for stage in ("detect", "policy", "sanitize", "encode"):
        ax.plot(frames, [row[f"{stage}_ms"] for row in rows], label=stage, linewidth=1.2)
    ax.set_xlabel("frame")
    ax.set_ylabel("stage latency (ms)")
    ax.set_title("per-frame stage latency")
    ax.legend(loc="upper right", fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)


def render_comparison_figure(rows, path: Union[str, Path]):
    """Bar chart of minimal interaction cost per technique."""
    plt = _plt()
    labels = [row.technique.value for row in rows]
    costs = [row.witness.cost if row.witness else 0 for row in rows]
    unreachable = [row.witness is None for row in rows]
    fig, ax = plt.subplots(figsize=(6, 3.5))
    bars = ax.bar(labels, costs, color=["#d62728" if u else "#1f77b4" for u in unreachable])
    for bar, row in zip(bars, rows):
        label = "unreachable" if row.witness is None else str(row.witness.cost)
        ax.text(
            bar.get_x() + bar.get_width() / 2,
            bar.get_height() + 0.05,
            label,
            ha="center",
            va="bottom",
            fontsize=9,
        )
    ax.set_ylabel("minimal interaction cost")
    ax.set_title("interactions to reach target configuration")
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
