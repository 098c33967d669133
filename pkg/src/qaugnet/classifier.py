"""Logistic-regression privacy classifier trained with mini-batch gradient descent."""

from __future__ import annotations

import abc
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .errors import DegenerateTraining, DimensionError, InputError, ModelFormatError
from .features import FeatureVector, Vocabulary, fit_vocabulary, transform, transform_many

MODEL_FORMAT_VERSION = 1

Matrix = Union[np.ndarray, sp.spmatrix]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1.0
    epochs: int = 50
    batch_size: int = 32
    l2_penalty: float = 1e-4
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.learning_rate > 0:
            raise InputError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise InputError("epochs and batch_size must be positive")
        if self.l2_penalty < 0:
            raise InputError("l2_penalty must be non-negative")


@dataclass(frozen=True)
class LogisticModel:
    weights: np.ndarray
    bias: float = 0.0
    threshold: float = 0.5
    vocabulary_hash: Optional[str] = None
    loss_history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or not np.all(np.isfinite(w)) or not math.isfinite(self.bias):
            raise InputError("weights must be a finite 1-d vector and bias finite")
        if not 0 < self.threshold < 1:
            raise InputError("threshold must lie in (0, 1)")

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]

    def with_threshold(self, threshold: float) -> "LogisticModel":
        return LogisticModel(self.weights, self.bias, threshold, self.vocabulary_hash)

    def __eq__(self, other: object) -> bool:
        return (isinstance(other, LogisticModel)
                and np.array_equal(self.weights, other.weights)
                and (self.bias, self.threshold, self.vocabulary_hash)
                == (other.bias, other.threshold, other.vocabulary_hash))

    __hash__ = None


def bce_loss(z: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-example binary cross-entropy of logits ``z``, computed stably."""
    return np.maximum(z, 0) - y * z + np.log1p(np.exp(-np.abs(z)))


def loss_and_grad(w: np.ndarray, b: float, X: Matrix, y: np.ndarray,
                  l2_penalty: float = 0.0) -> tuple[float, np.ndarray, float]:
    """Mean BCE plus ``l2/2 * ||w||^2`` and its gradient in (w, b)."""
    y = np.asarray(y, dtype=float)
    z = X @ w + b
    residual = expit(z) - y
    loss = float(np.mean(bce_loss(z, y)) + 0.5 * l2_penalty * (w @ w))
    grad_w = np.asarray(X.T @ residual).ravel() / len(y) + l2_penalty * w
    return loss, grad_w, float(np.mean(residual))


def fit_matrix(X: Matrix, y: Sequence[int], config: TrainConfig = TrainConfig(),
               vocabulary_hash: Optional[str] = None, threshold: float = 0.5) -> LogisticModel:
    y = np.asarray(y, dtype=float)
    n, d = X.shape
    if n != len(y):
        raise DimensionError(f"{n} rows but {len(y)} labels")
    if n == 0 or len(np.unique(y)) < 2:
        raise DegenerateTraining("training data must contain both classes")
    if sp.issparse(X):
        X = sp.csr_matrix(X)
    rng = np.random.default_rng(config.seed)
    w = np.zeros(d)
    b = 0.0
    history = [loss_and_grad(w, b, X, y, config.l2_penalty)[0]]
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            _, gw, gb = loss_and_grad(w, b, X[idx], y[idx], config.l2_penalty)
            w -= config.learning_rate * gw
            b -= config.learning_rate * gb
        history.append(loss_and_grad(w, b, X, y, config.l2_penalty)[0])
    return LogisticModel(w, b, threshold, vocabulary_hash, tuple(history))


def train(examples: Sequence[tuple[FeatureVector, int]], config: TrainConfig = TrainConfig(),
          vocabulary_hash: Optional[str] = None) -> LogisticModel:
    if not examples:
        raise DegenerateTraining("no training examples")
    dims = {fv.dimension for fv, _ in examples}
    if len(dims) != 1:
        raise DimensionError(f"mixed feature dimensions {sorted(dims)}")
    data = [x for fv, _ in examples for x in fv.weights]
    cols = [i for fv, _ in examples for i in fv.indices]
    indptr = np.cumsum([0] + [len(fv.indices) for fv, _ in examples])
    X = sp.csr_matrix((np.asarray(data, dtype=float), np.asarray(cols, dtype=np.int64), indptr),
                      shape=(len(examples), dims.pop()))
    return fit_matrix(X, [label for _, label in examples], config, vocabulary_hash)


def _as_dense(model: LogisticModel, vector: Union[FeatureVector, np.ndarray]) -> float:
    if isinstance(vector, FeatureVector):
        if vector.dimension != model.dimension:
            raise DimensionError(f"vector dimension {vector.dimension} != model {model.dimension}")
        return float(sum(model.weights[i] * x for i, x in zip(vector.indices, vector.weights)))
    v = np.asarray(vector, dtype=float)
    if v.shape != (model.dimension,):
        raise DimensionError(f"vector shape {v.shape} != ({model.dimension},)")
    return float(model.weights @ v)


def predict_proba(model: LogisticModel, vector: Union[FeatureVector, np.ndarray]) -> float:
    return float(expit(_as_dense(model, vector) + model.bias))


def predict(model: LogisticModel, vector: Union[FeatureVector, np.ndarray],
            threshold: Optional[float] = None) -> int:
    t = model.threshold if threshold is None else threshold
    return int(predict_proba(model, vector) >= t)


def predict_proba_many(model: LogisticModel, X: Matrix) -> np.ndarray:
    if X.shape[1] != model.dimension:
        raise DimensionError(f"matrix width {X.shape[1]} != model {model.dimension}")
    return expit(np.asarray(X @ model.weights).ravel() + model.bias)


def predict_many(model: LogisticModel, X: Matrix, threshold: Optional[float] = None) -> np.ndarray:
    t = model.threshold if threshold is None else threshold
    return (predict_proba_many(model, X) >= t).astype(int)


# -- persistence -----------------------------------------------------------

def model_to_json(model: LogisticModel) -> str:
    return json.dumps({
        "version": MODEL_FORMAT_VERSION,
        "dimension": model.dimension,
        "weights": [float(x) for x in model.weights],
        "bias": float(model.bias),
        "threshold": float(model.threshold),
        "vocabulary": model.vocabulary_hash,
    }, separators=(",", ":"))


def save_model(model: LogisticModel, path) -> None:
    Path(path).write_text(model_to_json(model) + "\n", encoding="utf-8")


def load_model(path) -> LogisticModel:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    expected = {"version", "dimension", "weights", "bias", "threshold", "vocabulary"}
    if not isinstance(d, dict) or set(d) != expected:
        raise ModelFormatError(f"model file must have exactly the fields {sorted(expected)}")
    if d["version"] != MODEL_FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model version {d['version']!r}")
    weights = d["weights"]
    if (not isinstance(weights, list) or len(weights) != d["dimension"]
            or not all(isinstance(x, (int, float)) for x in weights)):
        raise ModelFormatError("weights must be a numeric list of length 'dimension'")
    try:
        return LogisticModel(np.array(weights, dtype=float), float(d["bias"]),
                             float(d["threshold"]), d["vocabulary"])
    except (InputError, TypeError, ValueError) as exc:
        raise ModelFormatError(str(exc)) from exc


# -- pluggable classifier interface ---------------------------------------------

class ClassifierInterface(abc.ABC):
    """Binary privacy classifier: 1 = private, 0 = not private."""

    @abc.abstractmethod
    def fit(self, corpus) -> "ClassifierInterface":
        ...

    @abc.abstractmethod
    def predict(self, document: str) -> tuple[int, float]:
        ...


class TfidfLogisticClassifier(ClassifierInterface):
    def __init__(self, config: TrainConfig = TrainConfig(), max_features: int = 5000,
                 ngram_range: tuple[int, int] = (1, 3), threshold: float = 0.5):
        self.config = config
        self.max_features = max_features
        self.ngram_range = ngram_range
        self.threshold = threshold
        self.vocab: Optional[Vocabulary] = None
        self.model: Optional[LogisticModel] = None

    def fit(self, corpus) -> "TfidfLogisticClassifier":
        texts = [r.text for r in corpus]
        self.vocab = fit_vocabulary(texts, self.max_features, self.ngram_range)
        X = transform_many(texts, self.vocab)
        self.model = fit_matrix(X, [r.label for r in corpus], self.config,
                                self.vocab.fingerprint(), self.threshold)
        return self

    def predict(self, document: str) -> tuple[int, float]:
        if self.model is None:
            raise InputError("classifier is not fitted")
        p = predict_proba(self.model, transform(document, self.vocab))
        return int(p >= self.model.threshold), p
