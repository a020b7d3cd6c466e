"""Non-contextual baselines: multinomial Naive Bayes and a linear
one-vs-rest SVM trained with the Pegasos stochastic subgradient method.

Both consume SparseVector features (TF-IDF in the standard pipeline; the
Naive Bayes likelihood formula treats the weights as fractional counts).
Ties in argmax prediction always resolve to the lowest label id.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import LABELS, SentimentLabel
from .errors import InputError, TrainingError
from .features import SparseVector
from .rng import SplitMix64, derive_seed, shuffled

NUM_CLASSES = len(LABELS)


def _check_lengths(X: list[SparseVector], y: list[SentimentLabel]) -> None:
    if len(X) != len(y) or not X:
        raise InputError("X and y must be equal-length and non-empty")


def _check_all_labels_present(y: list[SentimentLabel]) -> None:
    present = {int(label) for label in y}
    missing = [l.display_name for l in LABELS if int(l) not in present]
    if missing:
        raise InputError(f"every label must appear at least once; missing: {missing}")


def _num_features(X: list[SparseVector]) -> int:
    return max((e[-1][0] + 1 for v in X if (e := v.entries)), default=0)


@dataclass
class NaiveBayesModel:
    class_log_prior: np.ndarray          # [C]
    feature_log_likelihood: np.ndarray   # [C, T]
    alpha: float


def nb_train(X: list[SparseVector], y: list[SentimentLabel], alpha: float = 1.0,
             num_features: int | None = None) -> NaiveBayesModel:
    """Multinomial NB with Laplace-style smoothing.

    likelihood[c][t] = (sum of x_t over docs of class c + alpha) /
                       (total feature mass of class c + alpha * T)
    """
    _check_lengths(X, y)
    _check_all_labels_present(y)
    if alpha <= 0:
        raise InputError("alpha must be > 0")
    T = num_features if num_features is not None else _num_features(X)
    if T == 0:
        raise InputError("feature space is empty")

    class_counts = np.zeros(NUM_CLASSES)
    feature_sums = np.zeros((NUM_CLASSES, T))
    for vec, label in zip(X, y):
        c = int(label)
        class_counts[c] += 1
        for fid, w in vec.entries:
            if fid >= T:
                raise InputError(f"feature id {fid} outside feature space of size {T}")
            feature_sums[c, fid] += w

    prior = np.log(class_counts / len(X))
    smoothed = feature_sums + alpha
    likelihood = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))
    if not np.all(np.isfinite(likelihood)):
        raise TrainingError("non-finite Naive Bayes likelihood")
    return NaiveBayesModel(class_log_prior=prior,
                           feature_log_likelihood=likelihood, alpha=alpha)


def nb_predict(m: NaiveBayesModel, x: SparseVector
               ) -> tuple[SentimentLabel, np.ndarray]:
    """Argmax label plus log-posteriors normalized with log-sum-exp."""
    T = m.feature_log_likelihood.shape[1]
    scores = m.class_log_prior.copy()
    for fid, w in x.entries:
        if fid >= T:
            raise InputError(f"feature id {fid} outside model feature space ({T})")
        scores += w * m.feature_log_likelihood[:, fid]
    log_posterior = scores - _logsumexp(scores)
    return SentimentLabel(int(np.argmax(scores))), log_posterior


def _logsumexp(scores: np.ndarray) -> float:
    peak = np.max(scores)
    return float(peak + np.log(np.sum(np.exp(scores - peak))))


@dataclass(frozen=True)
class SvmHyper:
    lambda_: float = 1e-4
    epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.lambda_ <= 0:
            raise InputError("lambda_ must be > 0")
        if self.epochs < 0:
            raise InputError("epochs must be >= 0")


@dataclass
class LinearSvmModel:
    weights: np.ndarray   # [C, T]
    bias: np.ndarray      # [C]
    hyper: SvmHyper


def svm_train(X: list[SparseVector], y: list[SentimentLabel],
              hyper: SvmHyper | None = None,
              num_features: int | None = None) -> LinearSvmModel:
    """One-vs-rest linear SVM, Pegasos updates.

    Per binary problem: step t has learning rate 1/(lambda*t); on margin
    violation w <- (1-1/t) w + eta*y*x and the unregularized bias moves by
    eta*y, otherwise only the shrink applies.  Example order is reshuffled
    each epoch from a per-class stream derived from the seed.  Labels absent
    from y keep a zero classifier.
    """
    hyper = hyper or SvmHyper()
    _check_lengths(X, y)
    T = num_features if num_features is not None else _num_features(X)
    if T == 0:
        raise InputError("feature space is empty")

    present = {int(label) for label in y}
    weights = np.zeros((NUM_CLASSES, T))
    bias = np.zeros(NUM_CLASSES)
    order0 = list(range(len(X)))
    for label in LABELS:
        c = int(label)
        if c not in present:
            continue
        targets = np.where(np.fromiter((int(l) for l in y), dtype=np.int64) == c, 1.0, -1.0)
        w = weights[c]
        rng = SplitMix64(derive_seed(hyper.seed, c))
        t = 0
        for _ in range(hyper.epochs):
            for i in shuffled(order0, rng):
                t += 1
                eta = 1.0 / (hyper.lambda_ * t)
                vec = X[i]
                margin = targets[i] * (_sparse_dot_dense(vec, w) + bias[c])
                w *= 1.0 - 1.0 / t
                if margin < 1.0:
                    yi = targets[i]
                    for fid, val in vec.entries:
                        w[fid] += eta * yi * val
                    bias[c] += eta * yi
            if not (np.all(np.isfinite(w)) and math.isfinite(bias[c])):
                raise TrainingError(f"SVM diverged for class {label.display_name}")
    return LinearSvmModel(weights=weights, bias=bias, hyper=hyper)


def _sparse_dot_dense(vec: SparseVector, w: np.ndarray) -> float:
    total = 0.0
    for fid, val in vec.entries:
        total += val * w[fid]
    return total


def svm_predict(m: LinearSvmModel, x: SparseVector
                ) -> tuple[SentimentLabel, np.ndarray]:
    T = m.weights.shape[1]
    scores = m.bias.copy()
    for fid, val in x.entries:
        if fid >= T:
            raise InputError(f"feature id {fid} outside model feature space ({T})")
        scores += val * m.weights[:, fid]
    return SentimentLabel(int(np.argmax(scores))), scores


def save_baseline(model: NaiveBayesModel | LinearSvmModel, path: str | Path,
                  term_index_ref: dict | None = None) -> None:
    """JSON envelope with arrays in feature-id order."""
    if isinstance(model, NaiveBayesModel):
        payload = {
            "format_version": 1,
            "model_type": "nb",
            "term_index_ref": term_index_ref,
            "alpha": model.alpha,
            "class_log_prior": model.class_log_prior.tolist(),
            "feature_log_likelihood": model.feature_log_likelihood.tolist(),
        }
    else:
        payload = {
            "format_version": 1,
            "model_type": "svm",
            "term_index_ref": term_index_ref,
            "hyper": {"lambda": model.hyper.lambda_, "epochs": model.hyper.epochs,
                      "seed": model.hyper.seed},
            "weights": model.weights.tolist(),
            "bias": model.bias.tolist(),
        }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")


def load_baseline(path: str | Path) -> tuple[NaiveBayesModel | LinearSvmModel, dict | None]:
    path = Path(path)
    if not path.exists():
        raise InputError(f"model file not found: {path}")
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
        kind = payload["model_type"]
        if kind == "nb":
            model = NaiveBayesModel(
                class_log_prior=np.asarray(payload["class_log_prior"], dtype=np.float64),
                feature_log_likelihood=np.asarray(payload["feature_log_likelihood"],
                                                  dtype=np.float64),
                alpha=float(payload["alpha"]))
        elif kind == "svm":
            h = payload["hyper"]
            model = LinearSvmModel(
                weights=np.asarray(payload["weights"], dtype=np.float64),
                bias=np.asarray(payload["bias"], dtype=np.float64),
                hyper=SvmHyper(lambda_=float(h["lambda"]), epochs=int(h["epochs"]),
                               seed=int(h["seed"])))
        else:
            raise InputError(f"unknown model_type {kind!r} in {path}")
        return model, payload.get("term_index_ref")
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed model file {path}: {e}") from None
