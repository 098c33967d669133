from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from qaugnet import corpus as cp
from qaugnet.classifier import LogisticModel
from qaugnet.errors import InputError, IoError
from qaugnet.features import fit_vocabulary
from qaugnet.qkd import qubit_cost
from qaugnet.report import (IterationCount, bar_chart_svg, emit_bar_chart, iterations_csv,
                            resource_experiment, savings)

SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def small():
    corpus = cp.build_dataset(300, 300, 6)
    return corpus, fit_vocabulary([r.text for r in corpus])


def rects(svg: str):
    return list(ET.fromstring(svg).iter(SVG + "rect"))


def test_desk_private_share_band(desk):
    its = resource_experiment(desk.corpus, desk.model, desk.vocab, seed=1)
    assert len(its) == 5
    for it in its:
        assert 500 <= it.sampled <= 800
        assert 0.40 <= it.private / it.sampled <= 0.60
    assert 0.40 <= savings(its).savings_fraction <= 0.60


def test_edge_parameters(small):
    corpus, vocab = small
    model = LogisticModel(np.zeros(len(vocab)))
    assert resource_experiment(corpus, model, vocab, iterations=0, sample_max=500) == []
    its = resource_experiment(corpus, model, vocab, sample_min=500, sample_max=500)
    assert all(it.sampled == 500 for it in its)
    with pytest.raises(InputError):
        resource_experiment(corpus, model, vocab, sample_max=len(corpus) + 1)


def test_experiment_deterministic(small):
    corpus, vocab = small
    model = LogisticModel(np.zeros(len(vocab)), bias=0.1)
    a = resource_experiment(corpus, model, vocab, sample_min=100, sample_max=400, seed=3)
    b = resource_experiment(corpus, model, vocab, sample_min=100, sample_max=400, seed=3)
    assert a == b and iterations_csv(a) == iterations_csv(b)


def test_savings_cases():
    all_private = [IterationCount(1, 3, 3, 0, (10, 20, 30), ())]
    assert savings(all_private).savings_fraction == 0
    half = [IterationCount(1, 4, 2, 2, (50, 50), (50, 50))]
    s = savings(half)
    assert s.savings_fraction == 0.5 and s.private_fraction == 0.5
    assert s.qubits_all_quantum == 4 * qubit_cost(50)
    assert savings([IterationCount(1, 1, 0, 1, (), (10,))]).savings_fraction == 1.0
    with pytest.raises(InputError):
        savings([])


def test_savings_uniform_lengths_complement():
    its = [IterationCount(i, 10, k, 10 - k, (7,) * k, (7,) * (10 - k)) for i, k in enumerate([2, 5, 9])]
    s = savings(its)
    assert s.savings_fraction == pytest.approx(1 - s.private_fraction)
    assert 0 <= s.savings_fraction <= 1


def test_iteration_count_invariant():
    with pytest.raises(InputError):
        IterationCount(1, 5, 2, 2)


@pytest.mark.parametrize("n", [1, 5])
def test_svg_rect_count(n):
    its = [IterationCount(i + 1, 10 + i, 4 + i, 6) for i in range(n)]
    svg = bar_chart_svg(its)
    assert len(rects(svg)) == 2 * n
    assert ET.fromstring(svg).get("version") == "1.1"


def test_svg_heights_proportional():
    its = [IterationCount(1, 700, 350, 350), IterationCount(2, 600, 250, 350),
           IterationCount(3, 512, 300, 212), IterationCount(4, 100, 1, 99)]
    rs = rects(bar_chart_svg(its))
    counts = [int(r.get("data-count")) for r in rs]
    heights = [float(r.get("height")) for r in rs]
    scale = max(heights) / max(counts)
    for c, h in zip(counts, heights):
        assert abs(h - c * scale) <= 1
    colors = [r.get("fill") for r in rs]
    assert colors == ["#d62728", "#000000"] * 4
    assert counts == [350, 350, 350, 250, 212, 300, 99, 1]


def test_emit_and_unwritable(tmp_path):
    its = [IterationCount(1, 2, 1, 1)]
    path = emit_bar_chart(its, tmp_path / "chart.svg")
    assert len(rects(path.read_text())) == 2
    with pytest.raises(IoError):
        emit_bar_chart(its, tmp_path / "missing" / "chart.svg")


def test_iterations_csv():
    its = [IterationCount(1, 3, 1, 2), IterationCount(2, 4, 4, 0)]
    assert iterations_csv(its) == "iteration,sampled,private,nonprivate\n1,3,1,2\n2,4,4,0\n"
