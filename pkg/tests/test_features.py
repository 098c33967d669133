from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qaugnet.errors import ModelFormatError
from qaugnet.features import (Vocabulary, fit_vocabulary, ngrams, tokenize, transform,
                              transform_many)


def test_tokenize_examples():
    assert tokenize("My SSN is 123-45-6789.") == ["my", "ssn", "is", "123-45-6789"]
    assert tokenize("") == []
    assert tokenize("A  b") == ["a", "b"]
    assert tokenize("Send to mary12@gmail.com now") == ["send", "to", "mary12@gmail.com", "now"]
    assert tokenize("Balance: $1,234.56") == ["balance", "$1", "234.56"]


def test_ngram_counts():
    assert ngrams(["a", "b", "c"]) == ["a", "b", "c", "a b", "b c", "a b c"]
    assert ngrams(["x"]) == ["x"]
    assert ngrams([], 1, 3) == []


@given(st.lists(st.sampled_from("abcde"), max_size=12), st.integers(1, 3), st.integers(0, 2))
def test_ngram_count_formula(tokens, lo, extra):
    hi = lo + extra
    expected = sum(max(len(tokens) - n + 1, 0) for n in range(lo, hi + 1))
    assert len(ngrams(tokens, lo, hi)) == expected


def test_idf_values():
    v = fit_vocabulary(["a b", "b c"], 10, (1, 1))
    idf = dict(zip(v.terms, v.idf))
    assert idf["b"] == pytest.approx(1.0, abs=1e-12)
    assert idf["a"] == pytest.approx(math.log(1.5) + 1, abs=1e-12)
    assert idf["a"] == pytest.approx(1.405465, abs=1e-6)


def test_cap_keeps_most_frequent_with_lexicographic_ties():
    v = fit_vocabulary(["x x y z"], 2, (1, 1))
    assert v.terms == ("x", "y")
    assert len(fit_vocabulary(["p q r s t"], 3, (1, 1))) == 3


def test_hand_tfidf():
    v = fit_vocabulary(["a a b", "b c"], 10)
    rare = math.log(3 / 2) + 1
    # d1 terms: a x2, b, "a a", "a b", "a a b"; only b appears in both docs
    raw = {"a": 2 * rare, "b": 1.0, "a a": rare, "a b": rare, "a a b": rare}
    norm = math.sqrt(sum(x * x for x in raw.values()))
    fv = transform("a a b", v)
    got = {v.terms[i]: w for i, w in zip(fv.indices, fv.weights)}
    assert set(got) == set(raw)
    for term, x in raw.items():
        assert got[term] == pytest.approx(x / norm, abs=1e-12)
    assert sorted(v.terms) == list(v.terms)
    assert len(v) == 7  # a, b, c, "a a", "a b", "b c", "a a b"


def test_zero_and_single_term_vectors():
    v = fit_vocabulary(["alpha beta", "beta gamma"], 10, (1, 1))
    zero = transform("nothing here", v)
    assert zero.indices == () and zero.norm() == 0
    one = transform("alpha", v)
    assert one.weights == (1.0,)


_WORDS = st.sampled_from(["pay", "money", "ssn", "123-45-6789", "lunch", "a", "b", "$5.00"])
_DOCS = st.lists(st.lists(_WORDS, max_size=10).map(" ".join), min_size=1, max_size=6)


@settings(max_examples=100)
@given(_DOCS, st.lists(_WORDS, max_size=12).map(" ".join), st.integers(1, 30))
def test_transform_norm_and_indices(docs, query, cap):
    v = fit_vocabulary(docs, cap)
    assert len(v) <= cap and all(x > 0 for x in v.idf)
    for doc in docs + [query]:
        fv = transform(doc, v)
        assert list(fv.indices) == sorted(set(fv.indices))
        assert all(0 <= i < len(v) for i in fv.indices)
        n = fv.norm()
        assert n == 0 or abs(n - 1) <= 1e-9
        assert fv == transform(doc, v)


def test_transform_many_matches_rows():
    docs = ["pay the money", "lunch on friday", "pay 123-45-6789"]
    v = fit_vocabulary(docs)
    X = transform_many(docs, v)
    for row, doc in zip(X.toarray(), docs):
        assert np.array_equal(row, transform(doc, v).to_dense())


def test_vocabulary_save_load(tmp_path):
    v = fit_vocabulary(["a a b", "b c"], 10)
    path = tmp_path / "vocab.json"
    v.save(path)
    back = Vocabulary.load(path)
    assert back == v and back.fingerprint() == v.fingerprint()
    path.write_text('{"terms": ["a"]}')
    with pytest.raises(ModelFormatError):
        Vocabulary.load(path)
    path.write_text("not json")
    with pytest.raises(ModelFormatError):
        Vocabulary.load(path)
