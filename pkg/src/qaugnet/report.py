"""Quantum-resource experiment: how many sampled emails need the quantum path,
and how many raw qubits that saves against sending everything quantum."""

from __future__ import annotations

import csv
import io
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence
from xml.sax.saxutils import escape

from .classifier import LogisticModel
from .corpus import Corpus
from .errors import InputError, IoError
from .features import Vocabulary
from .network import classify
from .qkd import qubit_cost

NONPRIVATE_COLOR = "#d62728"
PRIVATE_COLOR = "#000000"


@dataclass(frozen=True)
class IterationCount:
    iteration: int
    sampled: int
    private: int
    nonprivate: int
    # UTF-8 message sizes of the sampled emails, by predicted class
    private_lengths: tuple[int, ...] = field(default=(), repr=False)
    nonprivate_lengths: tuple[int, ...] = field(default=(), repr=False)

    def __post_init__(self) -> None:
        if self.private + self.nonprivate != self.sampled:
            raise InputError("private + nonprivate must equal sampled")


@dataclass(frozen=True)
class SavingsSummary:
    private_fraction: float
    qubits_augmented: int
    qubits_all_quantum: int
    savings_fraction: float

    def to_dict(self) -> dict:
        return {
            "private_fraction": self.private_fraction,
            "qubits_augmented": self.qubits_augmented,
            "qubits_all_quantum": self.qubits_all_quantum,
            "savings_fraction": self.savings_fraction,
        }


def resource_experiment(corpus: Corpus, model: LogisticModel, vocab: Vocabulary,
                        iterations: int = 5, sample_min: int = 500, sample_max: int = 800,
                        seed: int = 0, threshold: Optional[float] = None) -> list[IterationCount]:
    """Sample ``sample_min..sample_max`` emails per iteration and count the
    classifier's private/non-private predictions."""
    if iterations < 0 or not 0 <= sample_min <= sample_max:
        raise InputError("need iterations >= 0 and 0 <= sample_min <= sample_max")
    if len(corpus) < sample_max:
        raise InputError(f"corpus of {len(corpus)} is smaller than sample_max={sample_max}")
    rng = random.Random(seed)
    records = list(corpus.records)
    labels: dict[int, int] = {}
    out = []
    for it in range(1, iterations + 1):
        sample = rng.sample(records, rng.randint(sample_min, sample_max))
        priv, nonpriv = [], []
        for r in sample:
            if r.id not in labels:
                labels[r.id] = classify(r.text, model, vocab, threshold)
            (priv if labels[r.id] else nonpriv).append(len(r.text.encode("utf-8")))
        out.append(IterationCount(it, len(sample), len(priv), len(nonpriv),
                                  tuple(priv), tuple(nonpriv)))
    return out


def savings(iterations: Sequence[IterationCount],
            cost: Callable[[int], int] = qubit_cost) -> SavingsSummary:
    if not iterations:
        raise InputError("need at least one iteration")
    augmented = sum(cost(n) for it in iterations for n in it.private_lengths)
    baseline = augmented + sum(cost(n) for it in iterations for n in it.nonprivate_lengths)
    sampled = sum(it.sampled for it in iterations)
    private = sum(it.private for it in iterations)
    return SavingsSummary(
        private_fraction=private / sampled if sampled else 0.0,
        qubits_augmented=augmented,
        qubits_all_quantum=baseline,
        savings_fraction=1 - augmented / baseline if baseline else 0.0,
    )


def iterations_csv(iterations: Sequence[IterationCount]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "sampled", "private", "nonprivate"])
    for it in iterations:
        writer.writerow([it.iteration, it.sampled, it.private, it.nonprivate])
    return buf.getvalue()


def bar_chart_svg(iterations: Sequence[IterationCount], width: int = 640, height: int = 400) -> str:
    """Grouped bars per iteration: red = non-private, black = private."""
    if not iterations:
        raise InputError("need at least one iteration")
    left, right, top, bottom = 60, 20, 40, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    peak = max(max(it.private, it.nonprivate) for it in iterations) or 1
    slot = plot_w / len(iterations)
    bar_w = slot * 0.35
    base_y = top + plot_h

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<text x="{width / 2:.2f}" y="22" text-anchor="middle" font-family="sans-serif" '
        f'font-size="14">Private vs non-private emails per iteration</text>',
        f'<line x1="{left}" y1="{base_y}" x2="{width - right}" y2="{base_y}" stroke="#000"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{base_y}" stroke="#000"/>',
        f'<text x="{left - 6}" y="{top + 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">{peak}</text>',
        f'<text x="{left - 6}" y="{base_y}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11">0</text>',
    ]
    for i, it in enumerate(iterations):
        x0 = left + i * slot + (slot - 2 * bar_w) / 2
        for j, (count, color, kind) in enumerate(
                ((it.nonprivate, NONPRIVATE_COLOR, "nonprivate"), (it.private, PRIVATE_COLOR, "private"))):
            h = count / peak * plot_h
            parts.append(
                f'<rect x="{x0 + j * bar_w:.2f}" y="{base_y - h:.2f}" width="{bar_w:.2f}" '
                f'height="{h:.2f}" fill="{color}" data-kind="{kind}" data-count="{count}"/>')
        parts.append(
            f'<text x="{left + (i + 0.5) * slot:.2f}" y="{base_y + 16}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{escape(str(it.iteration))} (n={it.sampled})</text>')
    parts += [
        f'<text x="{width / 2:.2f}" y="{height - 10}" text-anchor="middle" font-family="sans-serif" '
        f'font-size="12">iteration</text>',
        f'<text x="{width - right}" y="{top - 4}" text-anchor="end" font-family="sans-serif" '
        f'font-size="11"><tspan fill="{NONPRIVATE_COLOR}">non-private</tspan> / '
        f'<tspan fill="{PRIVATE_COLOR}">private</tspan></text>',
        "</svg>",
    ]
    return "\n".join(parts) + "\n"


def emit_bar_chart(iterations: Sequence[IterationCount], path) -> Path:
    svg = bar_chart_svg(iterations)
    path = Path(path)
    try:
        path.write_text(svg, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc
    return path
