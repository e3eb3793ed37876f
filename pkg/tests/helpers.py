"""Shared test fixtures and independent oracles.

The oracles deliberately avoid the code paths they check: the eigensolver
oracle is cyclic Jacobi rotations, the assignment oracle enumerates
permutations, the k-means oracle enumerates partitions, and the Galerkin
oracle forms the dense triple product with an explicit 0/1 matrix.
"""

from __future__ import annotations

import itertools

import numpy as np
import scipy.sparse as sp

from specagg.graph import LaplacianMatrix, SimilarityGraph, laplacian


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations."""
    a = np.array(a, dtype=np.float64, copy=True)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off <= tol * max(1.0, np.abs(np.diag(a)).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    order = np.argsort(np.diag(a), kind="stable")
    return np.diag(a)[order], v[:, order]


def random_similarity_graph(rng: np.random.Generator, n: int,
                            edge_factor: float = 3.0,
                            weight_range=(0.1, 2.0)) -> SimilarityGraph:
    """A random undirected weighted graph without self loops or duplicates."""
    m = max(1, int(edge_factor * n))
    a = rng.integers(0, n, m)
    b = rng.integers(0, n, m)
    keep = a != b
    a, b = a[keep], b[keep]
    if a.size == 0:  # ensure at least one edge on tiny draws
        a = np.array([0])
        b = np.array([min(1, n - 1)]) if n > 1 else np.array([0])
        keep = a != b
        a, b = a[keep], b[keep]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    key = lo * n + hi
    _, idx = np.unique(key, return_index=True)
    lo, hi = lo[idx], hi[idx]
    w = rng.uniform(*weight_range, lo.size)
    adj = sp.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([lo, hi]), np.concatenate([hi, lo]))),
        shape=(n, n),
    ).tocsr()
    adj.sort_indices()
    return SimilarityGraph(adj)


def random_laplacian(rng: np.random.Generator, n: int, **kw) -> LaplacianMatrix:
    return laplacian(random_similarity_graph(rng, n, **kw))


def path_laplacian(n: int) -> LaplacianMatrix:
    """Unit-weight path graph 0-1-...-(n-1)."""
    rows = np.arange(n - 1)
    adj = sp.coo_matrix(
        (np.ones(2 * (n - 1)), (np.r_[rows, rows + 1], np.r_[rows + 1, rows])),
        shape=(n, n),
    ).tocsr()
    adj.sort_indices()
    return laplacian(SimilarityGraph(adj))


def brute_force_assignment_max(weights: np.ndarray) -> float:
    """Maximum assignment profit by exhaustive permutation search."""
    k = weights.shape[0]
    best = -np.inf
    for perm in itertools.permutations(range(k)):
        best = max(best, sum(weights[perm[j], j] for j in range(k)))
    return best


def brute_force_kmeans(points: np.ndarray, k: int):
    """Best mean-centroid partition under the unsquared-distance objective.

    Enumerates every assignment of points to k labeled clusters (empty
    clusters rejected), so only viable for tiny instances.
    """
    n = points.shape[0]
    best_obj = np.inf
    best_assign = None
    for assign in itertools.product(range(k), repeat=n):
        assign = np.asarray(assign)
        if len(np.unique(assign)) != k:
            continue
        obj = 0.0
        for j in range(k):
            members = points[assign == j]
            mu = members.mean(axis=0)
            obj += float(np.sqrt(((members - mu) ** 2).sum(axis=1)).sum())
        if obj < best_obj:
            best_obj = obj
            best_assign = assign
    return best_assign, best_obj


def dense_galerkin(lap: LaplacianMatrix, assignment: np.ndarray, n_coarse: int) -> np.ndarray:
    """Coarse Laplacian as the explicit dense triple product H L H^T."""
    n = lap.n_nodes
    h = np.zeros((n_coarse, n))
    h[assignment, np.arange(n)] = 1.0
    return h @ lap.matrix.toarray() @ h.T


def sign_cut(vec: np.ndarray) -> np.ndarray:
    return np.where(vec >= 0, 1, -1)


def cut_agreement(a: np.ndarray, b: np.ndarray) -> float:
    sa_, sb = sign_cut(a), sign_cut(b)
    return max(float((sa_ == sb).mean()), float((sa_ == -sb).mean()))
