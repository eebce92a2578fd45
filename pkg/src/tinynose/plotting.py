"""Figures written next to the CSV reports.

Uses the object-oriented Agg API (no pyplot state) so rendering is safe from
any thread and never needs a display.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .labels import CLASSES
from .pipeline import ConfusionMatrix

# Fixed metadata keeps repeated renders byte-identical.
_PNG_METADATA = {"Software": None}


def _save(fig: Figure, path: Path) -> Path:
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    return path


def plot_training_history(
    epoch_mse: Sequence[float],
    validation_mse: Sequence[float],
    path,
    target_mse: Optional[float] = None,
) -> Path:
    """Training (and validation) MSE per epoch on a log scale."""
    fig = Figure(figsize=(6.0, 4.0))
    ax = fig.add_subplot()
    epochs = np.arange(1, len(epoch_mse) + 1)
    ax.semilogy(epochs, epoch_mse, color="tab:blue", label="train")
    if len(validation_mse):
        ax.semilogy(epochs[: len(validation_mse)], validation_mse, color="tab:green", label="validation")
    if target_mse:
        ax.axhline(target_mse, color="0.4", ls="--", lw=1, label="target")
    ax.set_xlabel("epoch")
    ax.set_ylabel("mean squared error")
    if len(epoch_mse):
        ax.set_title(f"best train MSE {min(epoch_mse):.4g} at epoch {int(np.argmin(epoch_mse)) + 1}")
    ax.legend(frameon=False)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    return _save(fig, Path(path))


def plot_confusion_matrix(cm: ConfusionMatrix, path) -> Path:
    names = [c.name for c in CLASSES]
    fig = Figure(figsize=(4.5, 4.0))
    ax = fig.add_subplot()
    total = max(cm.total, 1)
    ax.imshow(cm.counts, cmap="Blues", vmin=0, vmax=max(int(cm.counts.max()), 1))
    for i in range(len(names)):
        for j in range(len(names)):
            n = int(cm.counts[i, j])
            ax.text(j, i, f"{n}\n{100.0 * n / total:.1f}%", ha="center", va="center", fontsize=9)
    ax.set_xticks(range(len(names)), names)
    ax.set_yticks(range(len(names)), names)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    if cm.unknown.any():
        ax.set_title(f"{int(cm.unknown.sum())} rejected as Unknown", fontsize=9)
    fig.tight_layout()
    return _save(fig, Path(path))
