from __future__ import annotations

import math
import random
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qaugnet.errors import InputError
from qaugnet.metrics import (ConfusionMatrix, confusion, confusion_csv, render_report, report,
                             report_csv)

GOLDEN = Path(__file__).parent / "golden"


def brute_force(preds, truths):
    """Recount everything from the raw pairs, one class at a time."""
    out = {}
    for c in (0, 1):
        tp = sum(1 for p, t in zip(preds, truths) if p == c and t == c)
        fp = sum(1 for p, t in zip(preds, truths) if p == c and t != c)
        fn = sum(1 for p, t in zip(preds, truths) if p != c and t == c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        out[c] = (prec, rec, f1, tp + fn)
    n = len(preds)
    acc = sum(1 for p, t in zip(preds, truths) if p == t) / n
    macro = tuple(sum(0.5 * out[c][k] for c in (0, 1)) for k in range(3))
    weighted = tuple(sum(out[c][3] / n * out[c][k] for c in (0, 1)) for k in range(3))
    return out, acc, macro, weighted


def matches_oracle(preds, truths) -> bool:
    rep = report(confusion(preds, truths))
    out, acc, macro, weighted = brute_force(preds, truths)
    ok = rep.accuracy == acc
    for c in (0, 1):
        m = rep.per_class[c]
        ok &= (m.precision, m.recall, m.f1, m.support) == out[c]
    ok &= (rep.macro.precision, rep.macro.recall, rep.macro.f1) == macro
    ok &= (rep.weighted.precision, rep.weighted.recall, rep.weighted.f1) == weighted
    return bool(ok)


def random_pairs(seed: int, count: int = 100):
    rng = random.Random(seed)
    for _ in range(count):
        n = rng.randint(1, 200)
        bias = rng.random()
        truths = [int(rng.random() < bias) for _ in range(n)]
        preds = [t if rng.random() < 0.8 else 1 - t for t in truths]
        yield preds, truths


def test_confusion_examples():
    assert confusion([1, 0, 1], [1, 0, 1]) == ConfusionMatrix(tp=2, fp=0, fn=0, tn=1)
    assert confusion([1, 1], [0, 0]).fp == 2
    with pytest.raises(InputError):
        confusion([1], [1, 0])
    with pytest.raises(InputError):
        confusion([], [])
    with pytest.raises(InputError):
        confusion([2], [1])


def test_report_matches_brute_force_recount():
    assert all(matches_oracle(p, t) for p, t in random_pairs(0))


def test_hand_computed_matrix():
    rep = report(ConfusionMatrix(tp=50, fp=10, fn=5, tn=35))
    assert rep.per_class[1].precision == pytest.approx(0.8333, abs=5e-5)
    assert rep.per_class[1].recall == pytest.approx(0.9091, abs=5e-5)
    assert rep.per_class[1].f1 == pytest.approx(0.8696, abs=5e-5)
    assert rep.per_class[0].precision == pytest.approx(0.875)
    assert rep.per_class[0].recall == pytest.approx(0.7778, abs=5e-5)
    assert rep.accuracy == pytest.approx(0.85)
    assert rep.macro.precision == pytest.approx(0.8542, abs=5e-5)
    assert rep.weighted.f1 == pytest.approx(0.8488, abs=5e-5)
    assert rep.per_class[0].support + rep.per_class[1].support == 100


def test_render_golden():
    rep = report(ConfusionMatrix(tp=50, fp=10, fn=5, tn=35))
    assert render_report(rep) == (GOLDEN / "report_tp50_fp10_fn5_tn35.txt").read_text()


def test_perfect_report():
    rep = report(confusion([1, 0, 1, 0], [1, 0, 1, 0]))
    text = render_report(rep)
    body = text.splitlines()[2:]
    assert all("1.00" in line for line in body)
    assert "0.00" not in text and rep.undefined == ()


def test_every_row_has_five_columns():
    rep = report(ConfusionMatrix(3, 1, 2, 4))
    for line in render_report(rep).splitlines()[2:]:
        assert len(line) == 53
    for row in report_csv(rep).splitlines():
        assert len(row.split(",")) == 5


def test_zero_denominators_are_flagged():
    rep = report(confusion([0, 0], [0, 0]))
    assert rep.per_class[1].precision == 0.0 and rep.per_class[1].recall == 0.0
    assert "precision[1]" in rep.undefined and "recall[1]" in rep.undefined
    assert "zero denominator" in render_report(rep)
    assert all(math.isfinite(x) for x in (rep.macro.f1, rep.weighted.f1, rep.accuracy))


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=300))
def test_report_properties(pairs):
    preds, truths = [p for p, _ in pairs], [t for _, t in pairs]
    rep = report(confusion(preds, truths))
    assert rep.accuracy == sum(p == t for p, t in pairs) / len(pairs)
    assert rep.total == len(pairs)
    for m in (*rep.per_class.values(), rep.macro, rep.weighted):
        for x in (m.precision, m.recall, m.f1):
            assert 0 <= x <= 1 and math.isfinite(x)


@given(st.integers(1, 500), st.integers(0, 500), st.integers(0, 500))
def test_balanced_supports_macro_equals_weighted(support, tp, tn):
    tp, tn = min(tp, support), min(tn, support)
    rep = report(ConfusionMatrix(tp=tp, fp=support - tn, fn=support - tp, tn=tn))
    assert (rep.macro.precision, rep.macro.recall, rep.macro.f1) == (
        rep.weighted.precision, rep.weighted.recall, rep.weighted.f1)


def test_confusion_csv():
    assert confusion_csv(ConfusionMatrix(1, 2, 3, 4)) == "truth,predicted_0,predicted_1\n0,4,2\n1,3,1\n"
