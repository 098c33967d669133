"""Raster figures (matplotlib) written next to the CSV/SVG outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .errors import IoError  # noqa: E402
from .metrics import ConfusionMatrix  # noqa: E402
from .report import NONPRIVATE_COLOR, PRIVATE_COLOR, IterationCount  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    try:
        fig.savefig(path, dpi=150, bbox_inches="tight", metadata={"Software": None})
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    finally:
        plt.close(fig)
    return path


def resource_bars(iterations: Sequence[IterationCount], path) -> Path:
    x = np.arange(len(iterations))
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.bar(x - 0.2, [it.nonprivate for it in iterations], 0.4,
           color=NONPRIVATE_COLOR, label="non-private")
    ax.bar(x + 0.2, [it.private for it in iterations], 0.4,
           color=PRIVATE_COLOR, label="private")
    ax.set_xticks(x)
    ax.set_xticklabels([f"{it.iteration}\n(n={it.sampled})" for it in iterations])
    ax.set_xlabel("iteration")
    ax.set_ylabel("emails")
    ax.legend(frameon=False)
    for side in ("top", "right"):
        ax.spines[side].set_visible(False)
    return _save(fig, path)


def confusion_heatmap(matrix: ConfusionMatrix, path) -> Path:
    cells = np.array([[matrix.tn, matrix.fp], [matrix.fn, matrix.tp]])
    fig, ax = plt.subplots(figsize=(4, 3.5))
    ax.imshow(cells, cmap="Blues")
    for (i, j), v in np.ndenumerate(cells):
        ax.text(j, i, str(v), ha="center", va="center",
                color="white" if v > cells.max() / 2 else "black")
    ax.set_xticks([0, 1])
    ax.set_yticks([0, 1])
    ax.set_xlabel("predicted label")
    ax.set_ylabel("true label")
    return _save(fig, path)
