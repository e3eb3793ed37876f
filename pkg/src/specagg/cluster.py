"""Seeded k-means with restarts, and membership lift-back through a hierarchy.

The reported objective is the sum of unsquared Euclidean distances to the
assigned centroids. Lloyd iterations internally monitor the sum of squared
distances, which is the quantity the update step actually minimizes and is
asserted to be nonincreasing.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coarsen import CoarseningHierarchy
from .errors import ConfigError

__all__ = ["KMeansResult", "ClusterResult", "kmeans", "lift_membership"]


@dataclass(frozen=True)
class KMeansResult:
    """Best-of-restarts k-means outcome."""

    assignment: np.ndarray
    centroids: np.ndarray
    objective: float  # sum of unsquared distances to assigned centroids
    iterations: int
    converged: bool
    sq_objective_trace: tuple = ()  # per-iteration Lloyd potential, winning restart


@dataclass(frozen=True)
class ClusterResult:
    """Cluster ids for original samples and for the pseudo-nodes they map to."""

    labels: np.ndarray
    coarse_labels: np.ndarray
    k: int


def _sq_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = (
        np.einsum("ij,ij->i", points, points)[:, None]
        + np.einsum("ij,ij->i", centroids, centroids)[None, :]
        - 2.0 * points @ centroids.T
    )
    np.maximum(d2, 0.0, out=d2)
    return d2


def _kmeans_pp_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding; duplicates are avoided while distinct points remain."""
    n = points.shape[0]
    centroids = np.empty((k, points.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = points[first]
    d2 = _sq_distances(points, centroids[:1]).ravel()
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            probs = d2 / total
            choice = int(rng.choice(n, p=probs))
        else:
            # All remaining mass sits on already-chosen coordinates; take the
            # lowest-index point that differs from every centroid so far.
            choice = first
            for i in range(n):
                if not np.any(np.all(points[i] == centroids[:j], axis=1)):
                    choice = i
                    break
        centroids[j] = points[choice]
        d2 = np.minimum(d2, _sq_distances(points, centroids[j:j + 1]).ravel())
    return centroids


def _lloyd(points: np.ndarray, centroids: np.ndarray, max_iters: int):
    """Lloyd iterations; returns (assignment, centroids, iters, converged, trace)."""
    n, k = points.shape[0], centroids.shape[0]
    assignment = np.full(n, -1, dtype=np.int64)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        d2 = _sq_distances(points, centroids)
        new_assignment = np.argmin(d2, axis=1)  # argmin takes the lower id on ties

        # Repair empty clusters by stealing the point farthest from its centroid.
        counts = np.bincount(new_assignment, minlength=k)
        for j in np.flatnonzero(counts == 0):
            dist_own = d2[np.arange(n), new_assignment]
            donor_ok = counts[new_assignment] > 1
            if not np.any(donor_ok):
                break
            masked = np.where(donor_ok, dist_own, -np.inf)
            donor = int(np.argmax(masked))
            counts[new_assignment[donor]] -= 1
            new_assignment[donor] = j
            counts[j] = 1
            centroids[j] = points[donor]
            d2[:, j] = _sq_distances(points, centroids[j:j + 1]).ravel()

        sq_obj = float(d2[np.arange(n), new_assignment].sum())
        if trace and sq_obj > trace[-1] * (1 + 1e-9) + 1e-12:
            raise AssertionError(
                f"Lloyd potential increased: {trace[-1]} -> {sq_obj} at iteration {it}"
            )
        trace.append(sq_obj)

        if np.array_equal(new_assignment, assignment):
            converged = True
            break
        assignment = new_assignment
        for j in range(k):
            members = points[assignment == j]
            if members.size:
                centroids[j] = members.mean(axis=0)
    return assignment, centroids, it, converged, trace


def kmeans(points: np.ndarray, k: int, restarts: int = 10, max_iters: int = 100,
           seed: int = 42) -> KMeansResult:
    """Best of ``restarts`` k-means++ / Lloyd runs.

    Restart r draws from its own generator seeded with ``seed + r``; the
    winner has the lowest unsquared-distance objective, ties going to the
    earlier restart.
    """
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    if not np.all(np.isfinite(points)):
        raise ConfigError("kmeans input contains non-finite values")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise ConfigError(f"k must be in [1, {n}], got {k}")
    if restarts < 1 or max_iters < 1:
        raise ConfigError("restarts and max_iters must be >= 1")

    best: Optional[KMeansResult] = None
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        centroids = _kmeans_pp_seed(points, k, rng)
        assignment, centroids, iters, converged, trace = _lloyd(points, centroids, max_iters)
        dists = np.sqrt(_sq_distances(points, centroids)[np.arange(n), assignment])
        objective = float(dists.sum())
        if best is None or objective < best.objective:
            best = KMeansResult(assignment, centroids, objective, iters, converged,
                                tuple(trace))
    assert best is not None
    return best


def lift_membership(coarse_labels: np.ndarray, hierarchy: CoarseningHierarchy) -> ClusterResult:
    """Assign every original sample the cluster of its coarsest pseudo-node."""
    coarse_labels = np.asarray(coarse_labels, dtype=np.int64)
    if coarse_labels.shape != (hierarchy.coarse_count,):
        raise ValueError(
            f"expected {hierarchy.coarse_count} coarse labels, got {coarse_labels.shape}"
        )
    labels = coarse_labels[hierarchy.correspondence]
    k = int(coarse_labels.max()) + 1 if coarse_labels.size else 0
    return ClusterResult(labels, coarse_labels, k)
