"""Spectrum-preserving node reduction.

A level of coarsening works on the graph Laplacian alone: random vectors
are relaxed toward the null space of L by Gauss-Seidel sweeps, so that
their node values vary smoothly along well-connected regions. Two nodes
whose rows of smoothed values point in nearly the same direction (squared
cosine close to 1) are spectrally interchangeable, and a greedy pass
merges such neighbors into aggregates. Restricting L onto the aggregates
(summing all entries between two aggregates) yields the coarse Laplacian,
and repeating the process gives a multilevel hierarchy whose flattened
assignment table maps every original node to its coarsest pseudo-node.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np
import scipy.sparse as sp

from ._kernels import edge_affinities_csr, gauss_seidel_zero_rhs, greedy_aggregate
from .errors import ConfigError
from .graph import LaplacianMatrix

__all__ = [
    "TestVectors",
    "MappingOperator",
    "CoarseningHierarchy",
    "CoarsenParams",
    "smooth_test_vectors",
    "affinity",
    "aggregate_level",
    "galerkin_reduce",
    "build_hierarchy",
    "hierarchy_to_json",
    "save_hierarchy_json",
]


@dataclass(frozen=True)
class TestVectors:
    """Gauss-Seidel-smoothed probe vectors, one column per vector."""

    __test__ = False  # bare data type despite the Test* name

    vectors: np.ndarray  # n x K
    sweeps: int

    @property
    def n_nodes(self) -> int:
        return self.vectors.shape[0]

    @property
    def n_vectors(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class MappingOperator:
    """Surjective fine-to-coarse node assignment for one level."""

    fine_count: int
    coarse_count: int
    assignment: np.ndarray

    def __post_init__(self):
        asn = np.asarray(self.assignment, dtype=np.int64)
        if asn.shape != (self.fine_count,):
            raise ValueError("assignment length must equal fine_count")
        counts = np.bincount(asn, minlength=self.coarse_count)
        if asn.size and (asn.min() < 0 or asn.max() >= self.coarse_count):
            raise ValueError("assignment ids out of range")
        if np.any(counts == 0):
            raise ValueError("every coarse id must receive at least one fine node")
        object.__setattr__(self, "assignment", asn)

    @classmethod
    def identity(cls, n: int) -> "MappingOperator":
        return cls(n, n, np.arange(n, dtype=np.int64))


@dataclass(frozen=True)
class CoarseningHierarchy:
    """Multilevel reduction result, finest to coarsest.

    ``levels[i]`` pairs the Laplacian entering level ``i`` with the mapping
    applied to it; ``coarsest`` is the Laplacian left after the last level.
    ``correspondence[p]`` is the coarsest pseudo-node of original node p.
    """

    levels: tuple
    coarsest: LaplacianMatrix
    correspondence: np.ndarray
    reached_target: bool = True
    warning: Optional[str] = None

    @property
    def n_original(self) -> int:
        return self.correspondence.shape[0]

    @property
    def coarse_count(self) -> int:
        return self.coarsest.n_nodes

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level_sizes(self) -> list:
        """Per-level (n_nodes, n_edges) from finest to coarsest."""
        sizes = [(lap.n_nodes, lap.n_edges) for lap, _ in self.levels]
        sizes.append((self.coarsest.n_nodes, self.coarsest.n_edges))
        return sizes


@dataclass(frozen=True)
class CoarsenParams:
    """Knobs for one hierarchy build."""

    n_vectors: int = 8
    sweeps: int = 4
    threshold: float = 0.5
    max_agg_size: int = 8
    max_levels: int = 30
    seed: int = 42
    symmetric_sweeps: bool = False

    def validate(self) -> None:
        if self.n_vectors < 1:
            raise ConfigError(f"n_vectors must be >= 1, got {self.n_vectors}")
        if self.sweeps < 1:
            raise ConfigError(f"sweeps must be >= 1, got {self.sweeps}")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold must lie in (0, 1), got {self.threshold}")
        if self.max_agg_size < 2:
            raise ConfigError(f"max_agg_size must be >= 2, got {self.max_agg_size}")
        if self.max_levels < 1:
            raise ConfigError(f"max_levels must be >= 1, got {self.max_levels}")


def smooth_test_vectors(lap: LaplacianMatrix, n_vectors: int, sweeps: int, seed: int,
                        initial: Optional[np.ndarray] = None,
                        symmetric: bool = False) -> TestVectors:
    """Relax random vectors toward the null space of the Laplacian.

    Vectors start i.i.d. uniform on [-1, 1] from the seeded generator
    (``initial`` overrides the start, mainly for tests) and receive the
    given number of forward Gauss-Seidel sweeps for ``L x = 0`` in
    ascending node order; ``symmetric`` appends a reverse sweep each time.
    """
    if n_vectors < 1:
        raise ConfigError(f"n_vectors must be >= 1, got {n_vectors}")
    if sweeps < 1:
        raise ConfigError(f"sweeps must be >= 1, got {sweeps}")
    n = lap.n_nodes
    if initial is not None:
        x = np.array(initial, dtype=np.float64, copy=True)
        if x.ndim == 1:
            x = x[:, None]
        if x.shape != (n, n_vectors):
            raise ValueError(f"initial must have shape ({n}, {n_vectors})")
    else:
        x = np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n, n_vectors))
    mat = lap.matrix
    bad = gauss_seidel_zero_rhs(mat.indptr, mat.indices, mat.data,
                                mat.diagonal(), x, sweeps, symmetric)
    if bad >= 0:
        raise ValueError(f"nonpositive diagonal at non-isolated node {bad}")
    return TestVectors(x, sweeps)


def affinity(tv: TestVectors, p: int, q: int) -> float:
    """Squared cosine between the rows of test-vector values at two nodes.

    1 means the nodes respond identically (up to scale) to every smoothed
    vector; 0 means orthogonal responses or a node with no signal.
    """
    if p == q:
        raise ValueError("affinity requires two distinct nodes")
    xp = tv.vectors[p]
    xq = tv.vectors[q]
    npp = float(xp @ xp)
    nqq = float(xq @ xq)
    if npp == 0.0 or nqq == 0.0:
        return 0.0
    dot = float(xp @ xq)
    return dot * dot / (npp * nqq)


def _edge_affinities(mat: sp.csr_matrix, tv: TestVectors) -> np.ndarray:
    """Affinity for every stored entry of ``mat``, aligned with its data array."""
    x = tv.vectors
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    safe = np.where(norms > 0, norms, 1.0)
    xn = x / safe[:, None]
    xn[norms == 0] = 0.0
    return edge_affinities_csr(mat.indptr, mat.indices, np.ascontiguousarray(xn))


def aggregate_level(lap: LaplacianMatrix, tv: TestVectors, threshold: float = 0.5,
                    max_agg_size: int = 8) -> MappingOperator:
    """Greedy affinity-driven aggregation of one level.

    Nodes are visited in ascending id; each unassigned node joins its
    best-affinity eligible neighbor (affinity >= threshold, target
    aggregate below ``max_agg_size``) or seeds a singleton. Only graph
    neighbors are scanned, so aggregates never span disconnected parts.
    """
    if not 0.0 < threshold < 1.0:
        raise ConfigError(f"threshold must lie in (0, 1), got {threshold}")
    if max_agg_size < 2:
        raise ConfigError(f"max_agg_size must be >= 2, got {max_agg_size}")
    mat = lap.matrix
    if tv.n_nodes != mat.shape[0]:
        raise ValueError("test vectors and Laplacian disagree on node count")
    aff = _edge_affinities(mat, tv)
    assignment, n_agg = greedy_aggregate(mat.indptr, mat.indices, aff,
                                         threshold, max_agg_size)
    return MappingOperator(mat.shape[0], int(n_agg), assignment)


def galerkin_reduce(lap: LaplacianMatrix, mapping: MappingOperator) -> LaplacianMatrix:
    """Restrict a Laplacian onto aggregates.

    Entry (a, b) of the result sums all fine entries between aggregates a
    and b, which equals the triple product of the 0/1 mapping matrix with L.
    Cross-aggregate weights are accumulated pairwise so the coarse matrix
    is exactly symmetric with nonpositive off-diagonals.
    """
    mat = lap.matrix
    n = mat.shape[0]
    if mapping.fine_count != n:
        raise ValueError(f"mapping covers {mapping.fine_count} nodes, Laplacian has {n}")
    nc = mapping.coarse_count
    asn = mapping.assignment

    coo = mat.tocoo()
    upper = coo.row < coo.col
    ca = asn[coo.row[upper]]
    cb = asn[coo.col[upper]]
    w = -coo.data[upper]
    cross = ca != cb
    ca, cb = np.minimum(ca[cross], cb[cross]), np.maximum(ca[cross], cb[cross])
    w = w[cross]

    half = sp.coo_matrix((w, (ca, cb)), shape=(nc, nc))
    half.sum_duplicates()
    adj = (half + half.T).tocsr()
    adj.sort_indices()
    degree = np.asarray(adj.sum(axis=1)).ravel()
    reduced = (sp.diags(degree, format="csr") - adj).tocsr()
    reduced.sort_indices()
    reduced.eliminate_zeros()
    return LaplacianMatrix(reduced, degree)


def build_hierarchy(lap: LaplacianMatrix, target_ratio: float,
                    params: Optional[CoarsenParams] = None) -> CoarseningHierarchy:
    """Coarsen until the node count drops to ``n / target_ratio``.

    Levels repeat smooth + aggregate + reduce. Near the target the
    per-level aggregate cap shrinks (down to pairs) so the final size
    cannot undershoot half the target. A level that shrinks the graph by
    less than 5% stops the build; a missed target is reported through
    ``reached_target`` and ``warning`` rather than an exception, so ratio
    sweeps always complete.
    """
    params = params or CoarsenParams()
    params.validate()
    if target_ratio < 1:
        raise ConfigError(f"target_ratio must be >= 1, got {target_ratio}")

    n = lap.n_nodes
    target = n / target_ratio
    levels: list = []
    corr = np.arange(n, dtype=np.int64)
    current = lap
    size = n
    warning = None
    while size > target:
        if len(levels) >= params.max_levels:
            warning = f"stopped at max_levels={params.max_levels} with {size} nodes"
            break
        tv = smooth_test_vectors(current, params.n_vectors, params.sweeps,
                                 params.seed + len(levels),
                                 symmetric=params.symmetric_sweeps)
        cap = min(params.max_agg_size, max(2, int(size / target)))
        mapping = aggregate_level(current, tv, params.threshold, cap)
        if mapping.coarse_count > 0.95 * size:
            warning = (f"stalled at {size} nodes: level shrank by "
                       f"{100.0 * (1 - mapping.coarse_count / size):.1f}% (< 5%)")
            break
        reduced = galerkin_reduce(current, mapping)
        levels.append((current, mapping))
        corr = mapping.assignment[corr]
        current = reduced
        size = mapping.coarse_count
    return CoarseningHierarchy(
        levels=tuple(levels),
        coarsest=current,
        correspondence=corr,
        reached_target=size <= target,
        warning=warning,
    )


def hierarchy_to_json(h: CoarseningHierarchy) -> dict:
    """JSON-ready summary: per-level sizes, assignments, correspondence."""
    return {
        "levels": [
            {
                "n_nodes": int(lap.n_nodes),
                "n_edges": int(lap.n_edges),
                "assignment": mapping.assignment.tolist(),
            }
            for lap, mapping in h.levels
        ],
        "coarsest": {"n_nodes": int(h.coarsest.n_nodes), "n_edges": int(h.coarsest.n_edges)},
        "correspondence": h.correspondence.tolist(),
        "reached_target": bool(h.reached_target),
        "warning": h.warning,
    }


def save_hierarchy_json(h: CoarseningHierarchy, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        json.dump(hierarchy_to_json(h), fh, sort_keys=True, indent=2)
        fh.write("\n")
