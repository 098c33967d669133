"""Binary confusion matrices and classification reports (label 1 = positive)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

from .errors import InputError


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ClassificationReport:
    per_class: dict  # label -> ClassMetrics
    accuracy: float
    macro: ClassMetrics
    weighted: ClassMetrics
    # metrics that hit a zero denominator and were set to 0
    undefined: tuple[str, ...] = field(default=())

    @property
    def total(self) -> int:
        return sum(m.support for m in self.per_class.values())


def confusion(predictions: Sequence[int], truths: Sequence[int]) -> ConfusionMatrix:
    if len(predictions) != len(truths):
        raise InputError(f"{len(predictions)} predictions vs {len(truths)} truths")
    if not predictions:
        raise InputError("cannot build a confusion matrix from no examples")
    counts = {(1, 1): 0, (1, 0): 0, (0, 1): 0, (0, 0): 0}
    for p, t in zip(predictions, truths):
        key = (int(p), int(t))
        if key not in counts:
            raise InputError(f"labels must be 0 or 1, got {key}")
        counts[key] += 1
    return ConfusionMatrix(tp=counts[1, 1], fp=counts[1, 0], fn=counts[0, 1], tn=counts[0, 0])


def _ratio(num: float, den: float, name: str, undefined: list) -> float:
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def report(matrix: ConfusionMatrix) -> ClassificationReport:
    total = matrix.total
    if total <= 0:
        raise InputError("empty confusion matrix")
    undefined: list[str] = []
    # (true positives, false positives, false negatives) with each class as positive
    views = {
        0: (matrix.tn, matrix.fn, matrix.fp),
        1: (matrix.tp, matrix.fp, matrix.fn),
    }
    per_class = {}
    for label, (tp, fp, fn) in views.items():
        p = _ratio(tp, tp + fp, f"precision[{label}]", undefined)
        r = _ratio(tp, tp + fn, f"recall[{label}]", undefined)
        f = _ratio(2 * p * r, p + r, f"f1[{label}]", undefined)
        per_class[label] = ClassMetrics(p, r, f, tp + fn)

    def average(weights: dict) -> ClassMetrics:
        wsum = sum(weights.values())
        return ClassMetrics(
            # normalise first so equal weights give bit-identical averages
            *(sum(weights[c] / wsum * getattr(per_class[c], attr) for c in per_class)
              for attr in ("precision", "recall", "f1")),
            total,
        )

    return ClassificationReport(
        per_class=per_class,
        accuracy=(matrix.tp + matrix.tn) / total,
        macro=average({0: 1, 1: 1}),
        weighted=average({c: m.support for c, m in per_class.items()}),
        undefined=tuple(undefined),
    )


COLUMNS = ("Class", "Precision", "Recall", "F1-Score", "Support")
WIDTHS = (14, 11, 9, 10, 9)


def _row(cells: Sequence[str]) -> str:
    first = f"{cells[0]:<{WIDTHS[0]}}"
    return first + "".join(f"{c:>{w}}" for c, w in zip(cells[1:], WIDTHS[1:]))


def _rates(m: ClassMetrics) -> list[str]:
    return [f"{m.precision:.2f}", f"{m.recall:.2f}", f"{m.f1:.2f}", str(m.support)]


def report_rows(rep: ClassificationReport) -> list[list[str]]:
    """Table cells in display order; the accuracy row leaves precision and
    recall blank like the published layout."""
    return [
        ["Class 0", *_rates(rep.per_class[0])],
        ["Class 1", *_rates(rep.per_class[1])],
        ["Accuracy", "", "", f"{rep.accuracy:.2f}", str(rep.total)],
        ["Macro Avg", *_rates(rep.macro)],
        ["Weighted Avg", *_rates(rep.weighted)],
    ]


def render_report(rep: ClassificationReport) -> str:
    lines = [_row(COLUMNS), "-" * sum(WIDTHS)]
    lines += [_row(cells) for cells in report_rows(rep)]
    if rep.undefined:
        lines.append(f"* zero denominator, reported as 0: {', '.join(rep.undefined)}")
    return "\n".join(lines) + "\n"


def report_csv(rep: ClassificationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["class", "precision", "recall", "f1", "support"])
    for cells, m in zip(report_rows(rep), (rep.per_class[0], rep.per_class[1], None,
                                           rep.macro, rep.weighted)):
        if m is None:
            writer.writerow(["accuracy", "", "", repr(rep.accuracy), rep.total])
        else:
            writer.writerow([cells[0].lower().replace(" ", "_"),
                             repr(m.precision), repr(m.recall), repr(m.f1), m.support])
    return buf.getvalue()


def confusion_csv(matrix: ConfusionMatrix) -> str:
    return ("truth,predicted_0,predicted_1\n"
            f"0,{matrix.tn},{matrix.fp}\n"
            f"1,{matrix.fn},{matrix.tp}\n")
