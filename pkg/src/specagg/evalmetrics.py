"""Clustering accuracy via the best cluster-to-class assignment.

Accuracy counts the samples whose predicted cluster maps onto their true
class under the profit-maximizing assignment of clusters to classes,
computed with the Hungarian method. Ties between equally profitable
assignments resolve to the lexicographically smallest permutation so the
reported mapping is deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

__all__ = ["ConfusionMatrix", "AccReport", "confusion_matrix", "hungarian_max", "accuracy"]


@dataclass(frozen=True)
class ConfusionMatrix:
    """Co-occurrence counts, true class by predicted cluster."""

    counts: np.ndarray
    n_samples: int


@dataclass(frozen=True)
class AccReport:
    """Accuracy plus the cluster-to-class mapping that produced it."""

    acc: float
    mapping: tuple  # mapping[j] = class assigned to predicted cluster j


def confusion_matrix(truth: np.ndarray, predicted: np.ndarray) -> ConfusionMatrix:
    truth = np.asarray(truth, dtype=np.int64)
    predicted = np.asarray(predicted, dtype=np.int64)
    if truth.shape != predicted.shape or truth.ndim != 1:
        raise ValueError("truth and predicted must be equal-length 1-D arrays")
    if truth.size == 0:
        raise ValueError("cannot evaluate zero samples")
    if truth.min() < 0 or predicted.min() < 0:
        raise ValueError("labels must be non-negative")
    n_classes = int(truth.max()) + 1
    n_clusters = int(predicted.max()) + 1
    counts = np.zeros((n_classes, n_clusters), dtype=np.int64)
    np.add.at(counts, (truth, predicted), 1)
    return ConfusionMatrix(counts, truth.size)


def _profit(weights: np.ndarray, perm) -> float:
    return math.fsum(weights[perm[j], j] for j in range(len(perm)))


def _best_profit(weights: np.ndarray) -> float:
    if weights.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(weights, maximize=True)
    return math.fsum(weights[r, c] for r, c in zip(rows, cols))


def hungarian_max(weights: np.ndarray) -> tuple:
    """Row permutation maximizing ``sum_j weights[perm[j], j]``.

    The core solve is the O(k^3) Hungarian method; a refinement pass then
    walks the columns in order and pins the smallest row that still allows
    the optimum, which yields the lexicographically smallest maximizing
    permutation. Profits are compared exactly for integral matrices and
    with a small relative tolerance otherwise.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
        raise ValueError(f"weights must be square, got shape {weights.shape}")
    if not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite")
    k = weights.shape[0]
    if k == 0:
        return ()

    integral = bool(np.all(weights == np.round(weights)))

    def close(a: float, b: float) -> bool:
        if integral:
            return a == b
        return math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)

    remaining = list(range(k))
    perm = []
    target = _best_profit(weights)
    for j in range(k):
        sub_cols = np.arange(j + 1, k)
        pinned = None
        for r in remaining:
            rest_rows = [x for x in remaining if x != r]
            sub = weights[np.ix_(rest_rows, sub_cols)] if rest_rows else np.zeros((0, 0))
            if close(weights[r, j] + _best_profit(sub), target):
                pinned = r
                target = target - weights[r, j] if integral else _best_profit(sub)
                break
        if pinned is None:  # numerical fallback; keep the raw optimum for column j
            rows, cols = linear_sum_assignment(weights[np.ix_(remaining, np.arange(j, k))],
                                               maximize=True)
            pinned = remaining[rows[list(cols).index(0)]]
            target = target - weights[pinned, j]
        perm.append(pinned)
        remaining.remove(pinned)
    return tuple(perm)


def accuracy(truth: np.ndarray, predicted: np.ndarray) -> AccReport:
    """Fraction of samples matched under the best cluster-to-class mapping.

    The confusion matrix is zero-padded to square when the class and
    cluster alphabets differ.
    """
    cm = confusion_matrix(truth, predicted)
    counts = cm.counts
    size = max(counts.shape)
    padded = np.zeros((size, size), dtype=np.int64)
    padded[: counts.shape[0], : counts.shape[1]] = counts
    perm = hungarian_max(padded.astype(np.float64))
    matched = int(sum(padded[perm[j], j] for j in range(size)))
    n_clusters = counts.shape[1]
    return AccReport(acc=matched / cm.n_samples, mapping=tuple(perm[:n_clusters]))
