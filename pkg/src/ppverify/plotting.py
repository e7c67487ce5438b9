"""Figures for simulation output.  Everything is written to files (Agg backend)."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from .core import Configuration, Protocol  # noqa: E402


def plot_trajectory(p: Protocol, trace: Sequence[Tuple[int, Configuration]], path: str,
                    title: Optional[str] = None) -> str:
    """Step plot of per-state counts against parallel time."""
    if not trace:
        raise ValueError("empty trace")
    n = sum(trace[0][1]) or 1
    xs = [steps / n for steps, _ in trace]
    fig, ax = plt.subplots(figsize=(7, 4))
    for i, q in enumerate(p.states):
        ys = [c[i] for _, c in trace]
        if not any(ys):
            continue
        style = "-" if p.output[q] else "--"
        ax.step(xs, ys, where="post", linestyle=style, label=q)
    ax.set_xlabel("parallel time")
    ax.set_ylabel("agents")
    ax.yaxis.set_major_locator(MaxNLocator(integer=True))
    if title:
        ax.set_title(title)
    ax.legend(fontsize="small", ncol=2, title="solid: output 1", title_fontsize="x-small")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_times(times: List[float], path: str, title: Optional[str] = None) -> str:
    """Histogram of stabilization times of an ensemble."""
    fig, ax = plt.subplots(figsize=(6, 4))
    if times:
        ax.hist(times, bins=min(30, max(5, len(times) // 5)))
    ax.set_xlabel("parallel time to stabilization")
    ax.set_ylabel("runs")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
