"""Tokenization, n-grams and a TF-IDF vectorizer with a capped vocabulary."""

from __future__ import annotations

import hashlib
import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import InputError, ModelFormatError

# '-', '@', '.', '$' survive inside tokens so SSNs, addresses and amounts stay whole.
_TOKEN_RE = re.compile(r"(?:[^\W_]|[-@.$])+")
_EDGE_CHARS = "-.@"


def tokenize(text: str) -> list[str]:
    tokens = []
    for raw in _TOKEN_RE.findall(text.lower()):
        tok = raw.strip(_EDGE_CHARS)
        if any(ch.isalnum() for ch in tok):
            tokens.append(tok)
    return tokens


def ngrams(tokens: Sequence[str], n_min: int = 1, n_max: int = 3) -> list[str]:
    if not 1 <= n_min <= n_max:
        raise InputError("need 1 <= n_min <= n_max")
    terms = []
    for n in range(n_min, n_max + 1):
        terms.extend(" ".join(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
    return terms


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    idf: tuple[float, ...]
    max_features: int = 5000
    ngram_range: tuple[int, int] = (1, 3)
    index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.terms) > self.max_features:
            raise InputError("vocabulary larger than max_features")
        if len(self.idf) != len(self.terms) or any(not v > 0 for v in self.idf):
            raise InputError("idf weights must be positive, one per term")
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def analyze(self, document: str) -> list[str]:
        return ngrams(tokenize(document), *self.ngram_range)

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "max_features": self.max_features,
            "ngram_range": list(self.ngram_range),
            "terms": [[t, i, w] for i, (t, w) in enumerate(zip(self.terms, self.idf))],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, separators=(",", ":"))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n", encoding="utf-8")

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        try:
            rows = sorted(d["terms"], key=lambda row: row[1])
            if [row[1] for row in rows] != list(range(len(rows))):
                raise ModelFormatError("vocabulary indices are not dense")
            return cls(tuple(str(r[0]) for r in rows), tuple(float(r[2]) for r in rows),
                       int(d["max_features"]), tuple(d["ngram_range"]))
        except (KeyError, TypeError, IndexError, InputError) as exc:
            raise ModelFormatError(f"bad vocabulary file: {exc}") from exc

    @classmethod
    def load(cls, path) -> "Vocabulary":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"vocabulary is not valid JSON: {exc}") from exc
        return cls.from_dict(d)


@dataclass(frozen=True)
class FeatureVector:
    indices: tuple[int, ...]
    weights: tuple[float, ...]
    dimension: int

    def norm(self) -> float:
        return math.sqrt(sum(w * w for w in self.weights))

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.dimension)
        out[list(self.indices)] = self.weights
        return out


def fit_vocabulary(documents: Iterable[str], max_features: int = 5000,
                   ngram_range: tuple[int, int] = (1, 3)) -> Vocabulary:
    """Keep the ``max_features`` most frequent terms (ties: lexicographic)
    and weight them with smoothed idf ``ln((1 + N) / (1 + df)) + 1``."""
    total: Counter = Counter()
    df: Counter = Counter()
    n_docs = 0
    for doc in documents:
        terms = ngrams(tokenize(doc), *ngram_range)
        total.update(terms)
        df.update(set(terms))
        n_docs += 1
    if n_docs == 0:
        raise InputError("cannot fit a vocabulary on zero documents")
    ranked = sorted(total.items(), key=lambda kv: (-kv[1], kv[0]))[:max_features]
    terms = tuple(sorted(t for t, _ in ranked))
    idf = tuple(math.log((1 + n_docs) / (1 + df[t])) + 1.0 for t in terms)
    return Vocabulary(terms, idf, max_features, tuple(ngram_range))


def transform(document: str, vocab: Vocabulary) -> FeatureVector:
    counts = Counter(t for t in vocab.analyze(document) if t in vocab.index)
    indices = sorted(vocab.index[t] for t in counts)
    raw = [counts[vocab.terms[i]] * vocab.idf[i] for i in indices]
    norm = math.sqrt(sum(w * w for w in raw))
    weights = tuple(w / norm for w in raw) if norm > 0 else tuple(raw)
    return FeatureVector(tuple(indices), weights, len(vocab))


def transform_many(documents: Iterable[str], vocab: Vocabulary) -> sp.csr_matrix:
    """Row-stacked :func:`transform` output as a CSR matrix."""
    data, cols, indptr = [], [], [0]
    for doc in documents:
        fv = transform(doc, vocab)
        cols.extend(fv.indices)
        data.extend(fv.weights)
        indptr.append(len(cols))
    return sp.csr_matrix(
        (np.asarray(data, dtype=float), np.asarray(cols, dtype=np.int64), np.asarray(indptr)),
        shape=(len(indptr) - 1, len(vocab)),
    )
