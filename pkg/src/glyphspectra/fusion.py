"""Bayesian belief integration of several classifiers.

Each classifier is calibrated by a confusion matrix counted on held-out
data; column-normalizing (with add-one smoothing) yields P(actual class i |
predicted class j). Fusing multiplies those conditional probabilities across
classifiers for the observed predictions and normalizes into a belief
vector; the decision is its argmax.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ContractError


def confusion_matrix(actuals, preds, classes) -> np.ndarray:
    """counts[i, j] = number of samples of actual class i predicted as j."""
    index = {c: i for i, c in enumerate(classes)}
    n = len(classes)
    counts = np.zeros((n, n), dtype=np.int64)
    actuals = list(actuals)
    preds = list(preds)
    if len(actuals) != len(preds):
        raise ContractError("actual and predicted label counts differ")
    for a, p in zip(actuals, preds):
        if a not in index or p not in index:
            raise ContractError(f"label outside class list: {a!r}/{p!r}")
        counts[index[a], index[p]] += 1
    return counts


def prob_matrix(counts: np.ndarray) -> np.ndarray:
    """Column-normalized counts after add-one smoothing.

    Entry (i, j) estimates P(actual = i | predicted = j); columns sum to 1.
    """
    smoothed = np.asarray(counts, dtype=float) + 1.0
    return smoothed / smoothed.sum(axis=0, keepdims=True)


@dataclass
class FusionModel:
    classes: list
    matrices: dict[str, np.ndarray]  # classifier tag -> ProbMatrix

    def to_dict(self) -> dict:
        return {"classes": self.classes,
                "matrices": {tag: m.tolist()
                             for tag, m in sorted(self.matrices.items())}}

    @classmethod
    def from_dict(cls, data: dict) -> "FusionModel":
        return cls(data["classes"],
                   {tag: np.array(m, dtype=float)
                    for tag, m in data["matrices"].items()})

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "FusionModel":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def fuse_beliefs(matrices, prediction_indices) -> np.ndarray:
    """Belief vector b(i) ~ prod_l P^l(i, j_l), normalized to sum 1."""
    matrices = list(matrices)
    prediction_indices = list(prediction_indices)
    if len(matrices) != len(prediction_indices):
        raise ContractError("one prediction per classifier required")
    n = matrices[0].shape[0]
    product = np.ones(n)
    for m, j in zip(matrices, prediction_indices):
        if not 0 <= j < n:
            raise ContractError(f"prediction index {j} out of range")
        product *= m[:, j]
    total = product.sum()
    if total == 0:
        # unreachable after smoothing; fall back to majority vote
        votes = np.bincount(prediction_indices, minlength=n)
        out = np.zeros(n)
        out[int(np.argmax(votes))] = 1.0
        return out
    return product / total


def fuse(model: FusionModel, predictions: dict):
    """Combine per-classifier predicted labels into (belief vector, label).

    predictions maps classifier tag -> predicted class label; tags must
    match the calibrated matrices.
    """
    if set(predictions) != set(model.matrices):
        raise ContractError("prediction tags do not match calibrated classifiers")
    index = {c: i for i, c in enumerate(model.classes)}
    tags = sorted(model.matrices)
    b = fuse_beliefs([model.matrices[t] for t in tags],
                     [index[predictions[t]] for t in tags])
    return b, model.classes[int(np.argmax(b))]


def calibrate(classes, predictions_per_tag: dict, actuals) -> FusionModel:
    """Build a FusionModel from held-out predictions of each classifier."""
    matrices = {tag: prob_matrix(confusion_matrix(actuals, preds, classes))
                for tag, preds in predictions_per_tag.items()}
    return FusionModel(list(classes), matrices)
