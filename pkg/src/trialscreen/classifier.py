"""Built-in trainable text classifier: TF-IDF n-grams + logistic regression.

This is the self-contained baseline that stands in for heavyweight encoder
backends: one binary model per exclusion type, trained on section-tagged
criterion text. Transformer models plug in through the wire protocol in
`backend` instead.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    CorruptModelFile,
    EmptyText,
    NonFiniteLoss,
    SingleClassData,
)
from .keywords import ExclusionType

MODEL_FORMAT = "trialscreen-linear-model"
MODEL_VERSION = 1

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class LabeledExample:
    criterion_key: tuple[str, int]
    exclusion: ExclusionType
    tagged_text: str
    label: int

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass(frozen=True)
class Prediction:
    criterion_key: tuple[str, int] | None
    exclusion: ExclusionType | None
    score: float
    label: int


@dataclass
class Hyperparams:
    l2: float = 1e-4
    learning_rate: float = 0.5
    epochs: int = 30
    seed: int = 0
    class_weighting: bool = False  # inverse-frequency example weights

    def to_json(self) -> dict:
        return {
            "l2": self.l2,
            "learning_rate": self.learning_rate,
            "epochs": self.epochs,
            "seed": self.seed,
            "class_weighting": self.class_weighting,
        }


def tokenize(text: str) -> list[str]:
    """Lowercase word unigrams + bigrams, split on non-alphanumeric runs."""
    words = _TOKEN_RE.findall(text.lower())
    return words + [f"{a} {b}" for a, b in zip(words, words[1:])]


@dataclass
class Vocabulary:
    index: dict[str, int]  # term -> feature id
    idf: np.ndarray  # per feature id

    def __len__(self) -> int:
        return len(self.index)


def build_vocabulary(texts: list[str]) -> Vocabulary:
    """Vocabulary + smoothed IDF over a corpus of tagged texts."""
    df: dict[str, int] = {}
    for text in texts:
        for term in set(tokenize(text)):
            df[term] = df.get(term, 0) + 1
    terms = sorted(df)
    index = {term: i for i, term in enumerate(terms)}
    n = len(texts)
    idf = np.array(
        [math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms], dtype=np.float64
    )
    return Vocabulary(index, idf)


def featurize(
    text: str, vocabulary: Vocabulary | None = None
) -> dict[int, float] | tuple[dict[int, float], Vocabulary]:
    """TF-IDF sparse vector, L2-normalized; unknown terms are dropped.

    With vocabulary=None, builds a single-document vocabulary and returns
    (vector, vocabulary).
    """
    if not text or not text.strip():
        raise EmptyText("cannot featurize empty text")
    building = vocabulary is None
    if vocabulary is None:
        vocabulary = build_vocabulary([text])
    counts: dict[int, int] = {}
    for term in tokenize(text):
        idx = vocabulary.index.get(term)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    vec = {idx: count * vocabulary.idf[idx] for idx, count in counts.items()}
    norm = math.sqrt(sum(v * v for v in vec.values()))
    if norm > 0:
        vec = {idx: v / norm for idx, v in vec.items()}
    if building:
        return vec, vocabulary
    return vec


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def loss_and_gradient(
    weights: np.ndarray,
    bias: float,
    X: np.ndarray,
    y: np.ndarray,
    l2: float,
    sample_weights: np.ndarray | None = None,
) -> tuple[float, np.ndarray, float]:
    """Mean logistic loss with L2 penalty on weights, plus its gradient.

    Dense X; used both by the trainer (via dense fold matrices) and by the
    finite-difference gradient check.
    """
    if sample_weights is None:
        sample_weights = np.ones(len(y))
    sw = sample_weights / sample_weights.sum()
    z = X @ weights + bias
    p = _sigmoid(z)
    eps = 1e-12
    loss = -np.sum(sw * (y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps)))
    loss += 0.5 * l2 * float(weights @ weights)
    resid = sw * (p - y)
    grad_w = X.T @ resid + l2 * weights
    grad_b = float(np.sum(resid))
    return float(loss), grad_w, grad_b


@dataclass
class LinearModel:
    vocabulary: Vocabulary
    weights: np.ndarray
    bias: float
    hyperparams: Hyperparams
    threshold: float = 0.5

    def score(self, text: str) -> float:
        vec = featurize(text, self.vocabulary)
        z = self.bias + sum(self.weights[idx] * v for idx, v in vec.items())
        return float(_sigmoid(np.array([z]))[0])

    def predict_scores(self, texts: list[str]) -> list[float]:
        return [self.score(t) for t in texts]


def train(examples: list[LabeledExample], hyperparams: Hyperparams | None = None) -> LinearModel:
    """Fit the logistic model with seeded-shuffle SGD; fully deterministic."""
    hp = hyperparams or Hyperparams()
    if not examples:
        raise SingleClassData("no training examples")
    labels = {e.label for e in examples}
    if labels != {0, 1}:
        raise SingleClassData(f"need both classes, got labels {sorted(labels)}")

    texts = [e.tagged_text for e in examples]
    vocab = build_vocabulary(texts)
    rows = [featurize(t, vocab) for t in texts]
    y = np.array([e.label for e in examples], dtype=np.float64)

    if hp.class_weighting:
        n_pos = float(y.sum())
        n = float(len(y))
        w_pos = n / (2.0 * n_pos)
        w_neg = n / (2.0 * (n - n_pos))
        sample_w = np.where(y == 1, w_pos, w_neg)
    else:
        sample_w = np.ones(len(y))

    weights = np.zeros(len(vocab), dtype=np.float64)
    bias = 0.0
    rng = np.random.RandomState(hp.seed)
    order = np.arange(len(examples))
    for _epoch in range(hp.epochs):
        rng.shuffle(order)
        for i in order:
            vec = rows[i]
            z = bias + sum(weights[idx] * v for idx, v in vec.items())
            if not math.isfinite(z):
                raise NonFiniteLoss("diverged during training")
            p = 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
            g = (p - y[i]) * sample_w[i]
            step = hp.learning_rate
            if hp.l2 > 0:
                weights *= 1.0 - step * hp.l2
            for idx, v in vec.items():
                weights[idx] -= step * g * v
            bias -= step * g
    return LinearModel(vocab, weights, bias, hp)


def save_model(model: LinearModel, path: str | Path) -> None:
    terms = [None] * len(model.vocabulary)
    for term, idx in model.vocabulary.index.items():
        terms[idx] = term
    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "terms": terms,
        "idf": [repr(float(v)) for v in model.vocabulary.idf.tolist()],
        "weights": [repr(float(v)) for v in model.weights.tolist()],
        "bias": repr(float(model.bias)),
        "threshold": model.threshold,
        "hyperparams": model.hyperparams.to_json(),
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> LinearModel:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModelFile(f"cannot read model file {path}: {exc}") from exc
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise CorruptModelFile(f"{path} is not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise CorruptModelFile(
            f"unsupported model version {payload.get('version')!r}, expected {MODEL_VERSION}"
        )
    try:
        terms = payload["terms"]
        idf = np.array([float(v) for v in payload["idf"]], dtype=np.float64)
        weights = np.array([float(v) for v in payload["weights"]], dtype=np.float64)
        bias = float(payload["bias"])
        hp = Hyperparams(**payload["hyperparams"])
        threshold = float(payload.get("threshold", 0.5))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptModelFile(f"malformed model file {path}: {exc}") from exc
    if len(weights) != len(terms) or len(idf) != len(terms):
        raise CorruptModelFile(f"inconsistent dimensions in {path}")
    vocab = Vocabulary({t: i for i, t in enumerate(terms)}, idf)
    return LinearModel(vocab, weights, bias, hp, threshold)
