"""Numba kernels for the sequential inner loops of coarsening.

Both kernels are single-threaded on purpose: Gauss-Seidel updates consume
values written earlier in the same sweep, and the greedy aggregation pass
is order-defined. Results are therefore bit-reproducible.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def gauss_seidel_zero_rhs(indptr, indices, data, diag, x, sweeps, symmetric):
    """In-place Gauss-Seidel sweeps for ``L x = 0`` on all columns of x.

    Rows with a nonpositive diagonal are skipped (isolated nodes keep their
    initial value). Returns the first row index with a nonpositive diagonal
    but at least one off-diagonal entry, or -1 if the matrix is well formed.
    """
    n = x.shape[0]
    n_vec = x.shape[1]
    for p in range(n):
        if diag[p] <= 0.0:
            for t in range(indptr[p], indptr[p + 1]):
                if indices[t] != p and data[t] != 0.0:
                    return p
    for _ in range(sweeps):
        for p in range(n):
            dp = diag[p]
            if dp <= 0.0:
                continue
            for j in range(n_vec):
                acc = 0.0
                for t in range(indptr[p], indptr[p + 1]):
                    q = indices[t]
                    if q != p:
                        acc -= data[t] * x[q, j]
                x[p, j] = acc / dp
        if symmetric:
            for p in range(n - 1, -1, -1):
                dp = diag[p]
                if dp <= 0.0:
                    continue
                for j in range(n_vec):
                    acc = 0.0
                    for t in range(indptr[p], indptr[p + 1]):
                        q = indices[t]
                        if q != p:
                            acc -= data[t] * x[q, j]
                    x[p, j] = acc / dp
    return -1


@njit(cache=True)
def edge_affinities_csr(indptr, indices, unit_rows):
    """Squared dot of row-normalized vector rows for every stored entry.

    ``unit_rows`` holds the test vectors scaled to unit row norm (zero rows
    stay zero), so each output entry is the squared cosine between the two
    endpoint rows. Streaming over the CSR layout avoids the large gather
    temporaries a vectorized formulation would allocate per level.
    """
    n = indptr.shape[0] - 1
    n_vec = unit_rows.shape[1]
    out = np.empty(indices.shape[0], dtype=np.float64)
    for p in range(n):
        for t in range(indptr[p], indptr[p + 1]):
            q = indices[t]
            acc = 0.0
            for k in range(n_vec):
                acc += unit_rows[p, k] * unit_rows[q, k]
            out[t] = acc * acc
    return out


@njit(cache=True)
def greedy_aggregate(indptr, indices, edge_affinity, threshold, max_size):
    """One greedy aggregation pass over nodes in ascending id.

    Each unassigned node joins the best-affinity eligible neighbor: the
    affinity must reach ``threshold`` and the neighbor must be unassigned
    or sit in an aggregate with fewer than ``max_size`` members. Affinity
    ties resolve toward the smaller neighbor id. Nodes with no eligible
    neighbor seed singleton aggregates. Aggregate ids are numbered in
    creation order. Returns (assignment, aggregate_count).
    """
    n = indptr.shape[0] - 1
    assignment = np.full(n, -1, dtype=np.int64)
    agg_size = np.zeros(n, dtype=np.int64)
    n_agg = 0
    for p in range(n):
        if assignment[p] >= 0:
            continue
        best_q = -1
        best_aff = -1.0
        for t in range(indptr[p], indptr[p + 1]):
            q = indices[t]
            if q == p:
                continue
            aff = edge_affinity[t]
            if aff < threshold:
                continue
            qa = assignment[q]
            if qa >= 0 and agg_size[qa] >= max_size:
                continue
            if aff > best_aff:  # columns are ascending, so ties keep smaller q
                best_aff = aff
                best_q = q
        if best_q < 0:
            assignment[p] = n_agg
            agg_size[n_agg] = 1
            n_agg += 1
        else:
            qa = assignment[best_q]
            if qa < 0:
                assignment[best_q] = n_agg
                assignment[p] = n_agg
                agg_size[n_agg] = 2
                n_agg += 1
            else:
                assignment[p] = qa
                agg_size[qa] += 1
    return assignment, n_agg
