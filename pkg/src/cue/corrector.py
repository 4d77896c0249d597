"""The corrector: a question -> P(answer unreliable) classifier.

Questions are featurized as hashed word n-grams (counts over unigrams and
bigrams by default) and scored by a single linear layer with a sigmoid,
trained with mini-batch SGD on binary cross-entropy. Weights start at zero,
so an untrained model outputs exactly 0.5 everywhere.

Everything is deterministic: hashing is keyed blake2b (stable across
processes and platforms, unlike builtin hash()), and shuffling uses a seeded
numpy generator. Two training runs with the same seed produce bit-identical
weights.

Model file layout (JSON, format_version 1):

    {
      "format_version": 1,
      "extractor": {"n_buckets": int, "ngram_orders": [int], "hash_seed": int},
      "weights": {"<bucket index>": float, ...},   # sparse; absent = 0.0
      "bias": float,
      "training_meta": {"seed": int, "epochs": int, "learning_rate": float,
                        "batch_size": int, "final_loss": float,
                        "n_examples": int, "warning": str?}
    }
"""

from __future__ import annotations

import hashlib
import json
import logging
import math

import numpy as np

from dataclasses import dataclass, field

from .errors import DatasetError, MissingInputError
from .judge import normalize_tokens
from .types import GenerationRecord, Method, ScoreSet

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
EPSILON = 1e-12


@dataclass(frozen=True)
class FeatureExtractor:
    """Hashed n-gram featurizer; deterministic given hash_seed."""

    n_buckets: int = 2**18
    ngram_orders: tuple[int, ...] = (1, 2)
    hash_seed: int = 0

    def __post_init__(self) -> None:
        if self.n_buckets < 2 or self.n_buckets & (self.n_buckets - 1) != 0:
            raise ValueError("n_buckets must be a power of two >= 2, got %d" % self.n_buckets)
        orders = tuple(sorted(set(self.ngram_orders)))
        if not orders or orders[0] < 1:
            raise ValueError("ngram_orders must be positive, got %r" % (self.ngram_orders,))
        object.__setattr__(self, "ngram_orders", orders)

    def bucket(self, order: int, gram: str) -> int:
        key = self.hash_seed.to_bytes(8, "little", signed=True)
        data = ("%d:%s" % (order, gram)).encode("utf-8")
        digest = hashlib.blake2b(data, digest_size=8, key=key).digest()
        return int.from_bytes(digest, "little") & (self.n_buckets - 1)


def featurize(question: str, extractor: FeatureExtractor) -> dict[int, float]:
    """Sparse nonnegative count vector of hashed word n-grams."""
    tokens = normalize_tokens(question)
    counts: dict[int, float] = {}
    for order in extractor.ngram_orders:
        for start in range(len(tokens) - order + 1):
            gram = " ".join(tokens[start : start + order])
            index = extractor.bucket(order, gram)
            counts[index] = counts.get(index, 0.0) + 1.0
    return counts


def _sigmoid(z: float) -> float:
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


def bce_loss(predictions, targets) -> float:
    """Summed binary cross-entropy; predictions clamped to [eps, 1-eps]."""
    predictions = list(predictions)
    targets = list(targets)
    if len(predictions) != len(targets):
        raise ValueError(
            "predictions and targets differ in length: %d vs %d"
            % (len(predictions), len(targets))
        )
    total = 0.0
    for p, y in zip(predictions, targets):
        p = min(max(p, EPSILON), 1.0 - EPSILON)
        total += -(y * math.log(p) + (1.0 - y) * math.log(1.0 - p))
    return total


@dataclass(frozen=True)
class CorrectorModel:
    """Linear layer + sigmoid over hashed n-gram features."""

    weights: np.ndarray
    bias: float
    extractor: FeatureExtractor
    training_meta: dict = field(default_factory=dict)

    def logit(self, features: dict[int, float]) -> float:
        return math.fsum(self.weights[i] * v for i, v in features.items()) + self.bias


def zero_model(extractor: FeatureExtractor) -> CorrectorModel:
    """The untrained model: all-zero weights, output 0.5 everywhere."""
    return CorrectorModel(
        weights=np.zeros(extractor.n_buckets, dtype=np.float64),
        bias=0.0,
        extractor=extractor,
        training_meta={},
    )


def predict(model: CorrectorModel, question: str) -> float:
    """P(unreliable) = sigmoid(W . featurize(q) + b), strictly inside (0,1)."""
    p = _sigmoid(model.logit(featurize(question, model.extractor)))
    return min(max(p, EPSILON), 1.0 - EPSILON)


def loss_and_gradient(
    weights: np.ndarray,
    bias: float,
    feature_rows: list[dict[int, float]],
    targets: list[int],
):
    """Summed BCE over the rows plus analytic gradients (for checks and SGD).

    d(loss)/d(logit) for one row is (prediction - target), so the weight
    gradient is that residual scattered over the row's feature values.
    """
    grad_w: dict[int, float] = {}
    grad_b = 0.0
    loss = 0.0
    for features, y in zip(feature_rows, targets):
        z = math.fsum(weights[i] * v for i, v in features.items()) + bias
        p = _sigmoid(z)
        clamped = min(max(p, EPSILON), 1.0 - EPSILON)
        loss += -(y * math.log(clamped) + (1.0 - y) * math.log(1.0 - clamped))
        residual = p - y
        for i, v in features.items():
            grad_w[i] = grad_w.get(i, 0.0) + residual * v
        grad_b += residual
    return loss, grad_w, grad_b


def train(
    correction_dataset: list[tuple[str, str, int]],
    extractor: FeatureExtractor = FeatureExtractor(),
    seed: int = 42,
    epochs: int = 10,
    learning_rate: float = 0.1,
    batch_size: int = 32,
) -> CorrectorModel:
    """Mini-batch SGD on BCE over (id, question, target) triples.

    Shuffling is reseeded once and advances across epochs; batch updates use
    the mean gradient. Deterministic given (seed, hyperparameters, dataset
    order). A single-class dataset trains anyway but records a warning in
    training_meta.
    """
    if not correction_dataset:
        raise DatasetError("corrector training needs a non-empty dataset")
    feature_rows = [featurize(question, extractor) for _, question, _ in correction_dataset]
    targets = [int(target) for _, _, target in correction_dataset]
    for target in targets:
        if target not in (0, 1):
            raise DatasetError("corrector target must be 0 or 1, got %r" % target)

    meta: dict = {
        "seed": seed,
        "epochs": epochs,
        "learning_rate": learning_rate,
        "batch_size": batch_size,
        "n_examples": len(targets),
    }
    if len(set(targets)) < 2:
        meta["warning"] = "single-class training data"
        logger.warning("corrector: single-class training data (all targets %d)", targets[0])

    weights = np.zeros(extractor.n_buckets, dtype=np.float64)
    bias = 0.0
    rng = np.random.default_rng(seed)
    n = len(targets)
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            _, grad_w, grad_b = loss_and_gradient(
                weights,
                bias,
                [feature_rows[i] for i in batch],
                [targets[i] for i in batch],
            )
            scale = learning_rate / len(batch)
            for i, g in grad_w.items():
                weights[i] -= scale * g
            bias -= scale * grad_b

    final_loss, _, _ = loss_and_gradient(weights, bias, feature_rows, targets)
    meta["final_loss"] = final_loss / n
    return CorrectorModel(weights=weights, bias=bias, extractor=extractor, training_meta=meta)


def score_samples(model: CorrectorModel, samples) -> ScoreSet:
    """Corrector probabilities for a list of Samples."""
    return ScoreSet(
        method=Method.CORRECTOR,
        scores={sample.id: predict(model, sample.question) for sample in samples},
        normalized=True,
    )


def scores_from_external(records: list[GenerationRecord]) -> ScoreSet:
    """Pass through adapter-supplied corrector probabilities."""
    scores: dict[str, float] = {}
    for record in records:
        prob = record.external_corrector_prob
        if prob is None:
            raise DatasetError("external corrector prob missing: %s" % record.id)
        if not 0.0 <= prob <= 1.0:
            raise DatasetError(
                "external corrector prob %g outside [0,1]: %s" % (prob, record.id)
            )
        scores[record.id] = prob
    return ScoreSet(method=Method.CORRECTOR, scores=scores, normalized=True)


def save_model(model: CorrectorModel, path: str) -> None:
    """Write the JSON model container (sparse weights, sorted keys)."""
    from .dataio import atomic_write_text

    nonzero = np.nonzero(model.weights)[0]
    payload = {
        "format_version": FORMAT_VERSION,
        "extractor": {
            "n_buckets": model.extractor.n_buckets,
            "ngram_orders": list(model.extractor.ngram_orders),
            "hash_seed": model.extractor.hash_seed,
        },
        "weights": {str(int(i)): float(model.weights[i]) for i in nonzero},
        "bias": float(model.bias),
        "training_meta": model.training_meta,
    }
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_model(path: str) -> CorrectorModel:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            payload = json.load(handle)
    except OSError as exc:
        raise MissingInputError("cannot read %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise DatasetError("%s: invalid model JSON: %s" % (path, exc)) from exc
    version = payload.get("format_version")
    if version != FORMAT_VERSION:
        raise DatasetError(
            "%s: unsupported model format_version %r (expected %d)"
            % (path, version, FORMAT_VERSION)
        )
    ext = payload["extractor"]
    extractor = FeatureExtractor(
        n_buckets=int(ext["n_buckets"]),
        ngram_orders=tuple(int(o) for o in ext["ngram_orders"]),
        hash_seed=int(ext["hash_seed"]),
    )
    weights = np.zeros(extractor.n_buckets, dtype=np.float64)
    for index, value in payload["weights"].items():
        i = int(index)
        if not 0 <= i < extractor.n_buckets:
            raise DatasetError("%s: weight index %d out of range" % (path, i))
        weights[i] = float(value)
    if not np.all(np.isfinite(weights)) or not math.isfinite(float(payload["bias"])):
        raise DatasetError("%s: non-finite model parameters" % path)
    return CorrectorModel(
        weights=weights,
        bias=float(payload["bias"]),
        extractor=extractor,
        training_meta=dict(payload.get("training_meta", {})),
    )
