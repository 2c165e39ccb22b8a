"""Static SVG reports: loss curves, load convergence, field maps."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .training import RunMetrics, first_epoch_under

__all__ = ["plot_loss_curves", "plot_load_convergence", "plot_field"]


def plot_loss_curves(metrics: RunMetrics, path) -> None:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    epochs = np.asarray(metrics.epochs)
    for name, series in metrics.terms.items():
        series = np.asarray(series)
        if np.all(np.isnan(series)):
            continue
        ax.semilogy(epochs, np.maximum(series, 1e-300), label=name, lw=0.9)
    mse = np.asarray(metrics.mse_true)
    if not np.all(np.isnan(mse)):
        ax.semilogy(epochs, np.maximum(mse, 1e-300), label="MSE_true", lw=0.9, ls="--")
    ax.set_xlabel("epoch")
    ax.set_ylabel("loss")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_load_convergence(
    metrics: RunMetrics,
    true_loads: dict[int, float],
    path,
    threshold: float = 0.01,
) -> None:
    """Load traces with target lines; the first epoch within the threshold
    of its target is marked per segment (dash-dotted)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    epochs = np.asarray(metrics.epochs)
    for seg in metrics.segment_ids:
        series = np.asarray(metrics.loads[seg])
        (line,) = ax.plot(epochs, series, lw=1.0, label=f"P{seg}")
        target = true_loads.get(seg)
        if target is None:
            continue
        ax.axhline(target, color=line.get_color(), lw=0.6, ls=":")
        rel = np.abs(series - target) / abs(target)
        cross = first_epoch_under(rel, threshold)
        if cross is not None:
            ax.axvline(epochs[cross - 1], color=line.get_color(), lw=0.6, ls="-.")
    ax.set_xlabel("epoch")
    ax.set_ylabel("load")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_field(coords: np.ndarray, values: dict[str, np.ndarray], path) -> None:
    """Scatter maps of per-point fields (2D projections for 3D clouds)."""
    names = list(values)
    cols = min(3, len(names))
    rows = (len(names) + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(3.4 * cols, 2.9 * rows), squeeze=False)
    for k, name in enumerate(names):
        ax = axes[k // cols][k % cols]
        sc = ax.scatter(coords[:, 0], coords[:, 1], c=values[name], s=4, cmap="viridis")
        ax.set_title(name, fontsize=9)
        ax.set_aspect("equal")
        fig.colorbar(sc, ax=ax, shrink=0.8)
    for k in range(len(names), rows * cols):
        axes[k // cols][k % cols].axis("off")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
