"""k-nearest-neighbor similarity graphs and their Laplacians.

Neighbor search is exact brute force over Euclidean distances, computed in
row blocks so memory stays bounded. Distance ties are broken toward the
smaller sample index, which makes graph construction fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import scipy.sparse as sp

from .dataio import Dataset
from .errors import ConfigError, DataError

__all__ = [
    "SimilarityGraph",
    "LaplacianMatrix",
    "build_knn_graph",
    "laplacian",
    "connected_components",
    "save_graph_mm",
    "load_graph_mm",
    "validate_csr",
]

_BLOCK_BUDGET = 48_000_000  # bytes of pairwise-distance scratch per block


@dataclass(frozen=True)
class SimilarityGraph:
    """Symmetric weighted adjacency with a zero diagonal, in CSR form."""

    adjacency: sp.csr_matrix

    @property
    def n_nodes(self) -> int:
        return self.adjacency.shape[0]

    @property
    def n_edges(self) -> int:
        return self.adjacency.nnz // 2


@dataclass(frozen=True)
class LaplacianMatrix:
    """Unnormalized graph Laplacian (degree minus adjacency) plus degrees."""

    matrix: sp.csr_matrix
    degree: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_edges(self) -> int:
        diag_nnz = int(np.count_nonzero(self.matrix.diagonal()))
        return (self.matrix.nnz - diag_nnz) // 2


def validate_csr(mat: sp.csr_matrix) -> None:
    """Check CSR structure: sorted, duplicate-free columns, no stored zeros."""
    indptr, indices = mat.indptr, mat.indices
    if indptr[0] != 0 or indptr[-1] != len(indices):
        raise ValueError("corrupt CSR index pointer")
    if np.any(np.diff(indptr) < 0):
        raise ValueError("CSR row offsets must be nondecreasing")
    for r in range(mat.shape[0]):
        cols = indices[indptr[r]:indptr[r + 1]]
        if cols.size > 1 and np.any(np.diff(cols) <= 0):
            raise ValueError(f"columns of row {r} are not strictly increasing")
    if np.any(mat.data == 0.0):
        raise ValueError("CSR stores explicit zeros")


def _knn_candidates(features: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact k nearest neighbors per row under (distance, index) order.

    Returns (neighbors, kth_distance) where neighbors is n x k of column
    indices and kth_distance the Euclidean distance to the k-th neighbor.
    """
    n = features.shape[0]
    sq = np.einsum("ij,ij->i", features, features)
    nbrs = np.empty((n, k), dtype=np.int64)
    kth = np.empty(n, dtype=np.float64)
    block = max(1, min(n, _BLOCK_BUDGET // (8 * n)))
    for start in range(0, n, block):
        stop = min(start + block, n)
        d2 = sq[start:stop, None] + sq[None, :] - 2.0 * features[start:stop] @ features.T
        np.maximum(d2, 0.0, out=d2)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        # k-th smallest value bounds the candidate set; ties beyond k are
        # resolved per row by (distance, index).
        part = np.partition(d2, k - 1, axis=1)
        tau = part[:, k - 1]
        for r in range(stop - start):
            row = d2[r]
            cand = np.flatnonzero(row <= tau[r])
            if cand.size > k:
                order = np.lexsort((cand, row[cand]))
                cand = cand[order[:k]]
            else:
                cand = cand[np.argsort(row[cand], kind="stable")]
            nbrs[start + r] = cand
            kth[start + r] = np.sqrt(row[cand[-1]])
    return nbrs, kth


def build_knn_graph(data: Dataset, k_neighbors: int = 10,
                    weighting: str = "gaussian",
                    sigma: Union[float, str] = "auto") -> SimilarityGraph:
    """Build the union-symmetrized kNN graph of a dataset.

    Each sample selects its ``k_neighbors`` nearest points (Euclidean,
    ties toward the smaller index); an undirected edge is kept if either
    endpoint selected the other. Gaussian weights are
    ``exp(-dist^2 / (2 sigma^2))`` with ``sigma="auto"`` set to the mean
    distance to the k-th neighbor; binary weights are 1.
    """
    n = data.n_samples
    if not 1 <= k_neighbors < n:
        raise ConfigError(f"k_neighbors must be in [1, {n - 1}], got {k_neighbors}")
    if weighting not in ("gaussian", "binary"):
        raise ConfigError(f"unknown weighting {weighting!r}")

    feats = data.features
    nbrs, kth = _knn_candidates(feats, k_neighbors)

    rows = np.repeat(np.arange(n, dtype=np.int64), k_neighbors)
    cols = nbrs.ravel()
    lo = np.minimum(rows, cols)
    hi = np.maximum(rows, cols)
    pairs = np.unique(lo * n + hi)
    a = pairs // n
    b = pairs % n

    # Recompute distances once per undirected pair so both directions share
    # one canonical value and the adjacency is exactly symmetric.
    d2 = np.empty(a.size, dtype=np.float64)
    step = max(1, _BLOCK_BUDGET // (16 * max(1, feats.shape[1])))
    for s in range(0, a.size, step):
        e = min(s + step, a.size)
        diff = feats[a[s:e]] - feats[b[s:e]]
        d2[s:e] = np.einsum("ij,ij->i", diff, diff)

    if weighting == "binary":
        w = np.ones(a.size, dtype=np.float64)
    else:
        if sigma == "auto":
            sig = float(np.mean(kth))
        else:
            sig = float(sigma)
            if sig <= 0:
                raise ConfigError(f"sigma must be positive, got {sigma}")
        w = np.ones(a.size, dtype=np.float64)
        nz = d2 > 0
        if np.any(nz):
            if sig == 0:
                raise ConfigError("sigma=auto collapsed to 0 on non-duplicate data")
            w[nz] = np.exp(-d2[nz] / (2.0 * sig * sig))
        keep = w > 0.0  # drop weights that underflowed to exact zero
        a, b, w = a[keep], b[keep], w[keep]

    adj = sp.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([a, b]), np.concatenate([b, a]))),
        shape=(n, n),
    ).tocsr()
    adj.sort_indices()
    return SimilarityGraph(adj)


def laplacian(g: SimilarityGraph) -> LaplacianMatrix:
    """Degree-minus-adjacency Laplacian with the adjacency's sparsity plus diagonal."""
    adj = g.adjacency
    degree = np.asarray(adj.sum(axis=1)).ravel()
    lap = (sp.diags(degree, format="csr") - adj).tocsr()
    lap.sort_indices()
    lap.eliminate_zeros()  # isolated nodes contribute an empty row
    return LaplacianMatrix(lap, degree)


def connected_components(g: SimilarityGraph) -> np.ndarray:
    """Component id per node, numbered by breadth-first search from the
    lowest-index unvisited node."""
    adj = g.adjacency
    n = adj.shape[0]
    indptr, indices = adj.indptr, adj.indices
    comp = np.full(n, -1, dtype=np.int64)
    next_id = 0
    queue = np.empty(n, dtype=np.int64)
    for start in range(n):
        if comp[start] >= 0:
            continue
        comp[start] = next_id
        queue[0] = start
        head, tail = 0, 1
        while head < tail:
            u = queue[head]
            head += 1
            for t in range(indptr[u], indptr[u + 1]):
                v = indices[t]
                if comp[v] < 0:
                    comp[v] = next_id
                    queue[tail] = v
                    tail += 1
        next_id += 1
    return comp


def component_count_from_laplacian(lap: LaplacianMatrix) -> int:
    """Number of connected components of the graph underlying a Laplacian."""
    off = lap.matrix.copy()
    off.setdiag(0)
    off.eliminate_zeros()
    return int(np.max(connected_components(SimilarityGraph(np.abs(off).tocsr()))) + 1)


def save_graph_mm(g: SimilarityGraph, path: Union[str, Path]) -> None:
    """Dump the adjacency in Matrix Market coordinate format (symmetric, real)."""
    from scipy.io import mmwrite

    mmwrite(str(path), g.adjacency.tocoo(), symmetry="symmetric", precision=17)


def load_graph_mm(path: Union[str, Path]) -> SimilarityGraph:
    """Load an adjacency written by :func:`save_graph_mm`."""
    from scipy.io import mmread

    p = Path(path)
    if not p.exists():
        raise DataError(f"file not found: {p}")
    adj = sp.csr_matrix(mmread(str(p)))
    adj.sort_indices()
    adj.eliminate_zeros()
    if (adj != adj.T).nnz != 0:
        raise DataError(f"adjacency in {p} is not symmetric")
    if np.any(adj.diagonal() != 0):
        raise DataError(f"adjacency in {p} has a nonzero diagonal")
    return SimilarityGraph(adj)
