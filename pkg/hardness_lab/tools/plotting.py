"""
Plotting
========

Deterministic SVG figures: the landscape heatmap (log colour scale by
default) and the variance-decay plot.
"""

from typing import Dict, Optional, Sequence

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import LogNorm, Normalize  # noqa: E402

from ..config import SVG_HASH_SALT  # noqa: E402
from ..objective import LandscapeGrid  # noqa: E402

matplotlib.rcParams['svg.hashsalt'] = SVG_HASH_SALT

# Floor for the log colour scale; exact zeros at the minima would otherwise vanish
LOG_FLOOR = 1e-12


def landscape_figure(grid: LandscapeGrid, scale: str = 'log',
                     marks: Optional[Sequence[Sequence[float]]] = None,
                     title: str = "Objective landscape"):
    """Heatmap of F over the grid with optional point markers."""
    values = np.asarray(grid.values, dtype=float)
    if scale == 'log':
        shown = np.maximum(values, LOG_FLOOR)
        norm = LogNorm(vmin=float(shown.min()), vmax=max(float(shown.max()), LOG_FLOOR * 10))
    else:
        shown = values
        norm = Normalize(vmin=float(values.min()), vmax=float(values.max()))

    fig, ax = plt.subplots(figsize=(6, 5))
    mesh = ax.pcolormesh(grid.axes[0], grid.axes[1], shown.T, shading='nearest',
                         cmap='viridis', norm=norm)
    fig.colorbar(mesh, ax=ax, label='F(w)')
    for p in marks or []:
        ax.plot([p[0]], [p[1]], marker='x', color='red', markersize=8)
    ax.set_xlabel('w1')
    ax.set_ylabel('w2')
    ax.set_title(title)
    ax.set_aspect('equal')
    return fig


def decay_figure(curves: Dict[str, Sequence[Sequence[float]]], xlabel: str = 'r^2',
                 ylabel: str = 'log Var'):
    """One line per label; curves[label] = [(x, y), ...]."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label in sorted(curves):
        pts = [(x, y) for x, y in curves[label] if np.isfinite(y)]
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, marker='o', label=label)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend()
    ax.grid(True, alpha=0.3)
    return fig


def close(fig) -> None:
    plt.close(fig)
