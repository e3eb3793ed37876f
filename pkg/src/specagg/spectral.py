"""Eigen-embedding of graph Laplacians.

The reduced Laplacians this package produces are small, so the default
solver is a dense symmetric eigendecomposition. Above ``dense_limit`` a
Lanczos iteration with full reorthogonalization can be requested; it
deflates the Laplacian's null space exactly (component indicator vectors),
which is what makes the smallest nonzero eigenpairs reachable without
shift-invert machinery.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import ConfigError
from .graph import LaplacianMatrix, SimilarityGraph, connected_components

__all__ = ["Embedding", "bottom_eigs", "embed_rows"]


@dataclass(frozen=True)
class Embedding:
    """Bottom eigenvectors (columns) with their nondecreasing eigenvalues."""

    matrix: np.ndarray  # n x k
    eigenvalues: np.ndarray  # length k

    @property
    def n_nodes(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_vectors(self) -> int:
        return self.matrix.shape[1]


def _canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    out = vectors.copy()
    for j in range(out.shape[1]):
        idx = int(np.argmax(np.abs(out[:, j])))
        if out[idx, j] < 0:
            out[:, j] = -out[:, j]
    return out


def _component_indicators(mat: sp.csr_matrix) -> np.ndarray:
    """Orthonormal indicator basis of the Laplacian's null space."""
    off = mat.copy()
    off.setdiag(0)
    off.eliminate_zeros()
    comp = connected_components(SimilarityGraph(abs(off).tocsr()))
    z = int(comp.max()) + 1
    basis = np.zeros((mat.shape[0], z))
    for c in range(z):
        members = comp == c
        basis[members, c] = 1.0 / np.sqrt(members.sum())
    return basis


def _zero_tolerance(mat: sp.csr_matrix) -> float:
    max_diag = float(mat.diagonal().max(initial=0.0))
    return 1e-8 * max_diag if max_diag > 0 else 1e-12


def bottom_eigs(lap: LaplacianMatrix, k: int, skip_zero: bool = True, *,
                dense_limit: int = 4000, method: str = "auto",
                seed: int = 0, lanczos_tol: float = 5e-8,
                max_iter: Optional[int] = None) -> Embedding:
    """Eigenpairs at the bottom of a Laplacian's spectrum.

    With ``skip_zero`` the k smallest eigenpairs above the zero tolerance
    (1e-8 times the largest diagonal entry) are returned, otherwise the k
    smallest overall. Eigenvector signs are canonicalized so the
    largest-magnitude entry of each column is positive.

    ``method="auto"`` uses the dense solver and refuses dimensions above
    ``dense_limit``; pass ``method="lanczos"`` to force the iterative path
    (null space deflated structurally via connected components).
    """
    n = lap.n_nodes
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if k > n:
        raise ConfigError(f"k={k} exceeds matrix dimension {n}")
    if method not in ("auto", "dense", "lanczos"):
        raise ConfigError(f"unknown eigensolver method {method!r}")
    if method == "auto":
        if n > dense_limit:
            raise ConfigError(
                f"dimension {n} exceeds dense_limit={dense_limit}; "
                "force method='lanczos' for the iterative path"
            )
        method = "dense"
    if method == "dense":
        return _bottom_eigs_dense(lap, k, skip_zero)
    return _bottom_eigs_lanczos(lap, k, skip_zero, seed=seed, tol=lanczos_tol,
                                max_iter=max_iter)


def _bottom_eigs_dense(lap: LaplacianMatrix, k: int, skip_zero: bool) -> Embedding:
    mat = lap.matrix
    vals, vecs = np.linalg.eigh(mat.toarray())
    tol_zero = _zero_tolerance(mat)
    n_zero = int(np.count_nonzero(vals < tol_zero))
    first = n_zero if skip_zero else 0
    if first + k > len(vals):
        raise ConfigError(
            f"k={k} exceeds the {len(vals) - n_zero} available nonzero eigenpairs"
        )
    sel = slice(first, first + k)
    return Embedding(_canonical_signs(vecs[:, sel]), vals[sel].copy())


def _bottom_eigs_lanczos(lap: LaplacianMatrix, k: int, skip_zero: bool, *,
                         seed: int, tol: float, max_iter: Optional[int]) -> Embedding:
    mat = lap.matrix.tocsr()
    n = mat.shape[0]
    nullspace = _component_indicators(mat)
    z = nullspace.shape[1]
    if skip_zero:
        want = k
        if k > n - z:
            raise ConfigError(f"k={k} exceeds the {n - z} available nonzero eigenpairs")
    else:
        if k <= z:
            vals = np.zeros(k)
            return Embedding(_canonical_signs(nullspace[:, :k]), vals)
        want = k - z

    vals, vecs = _lanczos_smallest(mat, nullspace, want, seed=seed, tol=tol,
                                   max_iter=max_iter)
    if skip_zero:
        return Embedding(_canonical_signs(vecs), vals)
    full_vecs = np.hstack([nullspace, vecs])
    full_vals = np.concatenate([np.zeros(z), vals])
    return Embedding(_canonical_signs(full_vecs), full_vals)


def _lanczos_smallest(mat: sp.csr_matrix, deflate: np.ndarray, want: int, *,
                      seed: int, tol: float, max_iter: Optional[int]):
    """Smallest eigenpairs of ``mat`` orthogonal to the deflation basis.

    Plain Lanczos with full reorthogonalization against both the deflation
    basis and all previous Lanczos vectors. Convergence is judged by the
    Ritz residual bound beta * |last tridiagonal eigenvector entry|.
    """
    n = mat.shape[0]
    m_max = max_iter or max(12 * want + 120, 1000)
    m_max = min(max(m_max, want), n - deflate.shape[1])
    rng = np.random.default_rng(seed)

    basis = np.empty((n, m_max), dtype=np.float64)
    alphas = np.empty(m_max)
    betas = np.empty(m_max)

    def _orthogonalize(vec: np.ndarray, m: int) -> np.ndarray:
        for _ in range(2):  # twice is enough for full reorthogonalization
            vec = vec - deflate @ (deflate.T @ vec)
            if m > 0:
                vec = vec - basis[:, :m] @ (basis[:, :m].T @ vec)
        return vec

    def _fresh_start(m: int) -> np.ndarray:
        for _ in range(50):
            cand = _orthogonalize(rng.uniform(-1.0, 1.0, size=n), m)
            norm = np.linalg.norm(cand)
            if norm > 1e-8 * np.sqrt(n):
                return cand / norm
        raise RuntimeError("could not generate a vector outside the deflated space")

    basis[:, 0] = _fresh_start(0)
    beta_prev = 0.0
    m = 0
    check_every = max(10, 2 * want)
    scale = max(float(mat.diagonal().max(initial=0.0)), 1.0)
    while m < m_max:
        v = basis[:, m]
        w = mat @ v
        if m > 0 and beta_prev > 0:
            w = w - beta_prev * basis[:, m - 1]
        alpha = float(v @ w)
        w = w - alpha * v
        w = _orthogonalize(w, m + 1)
        beta = float(np.linalg.norm(w))
        alphas[m] = alpha
        betas[m] = beta
        m += 1
        if m < m_max:
            if beta <= 1e-12 * scale:
                basis[:, m] = _fresh_start(m)  # invariant subspace hit; restart
                beta_prev = 0.0
                betas[m - 1] = 0.0
            else:
                basis[:, m] = w / beta
                beta_prev = beta
        if m >= want and (m % check_every == 0 or m == m_max):
            theta, s = scipy.linalg.eigh_tridiagonal(alphas[:m], betas[:m - 1])
            resid = np.abs(betas[m - 1] * s[-1, :want])
            if np.all(resid <= tol * np.maximum(1.0, np.abs(theta[:want]))):
                break
            if m == m_max:
                worst = float(np.max(resid / np.maximum(1.0, np.abs(theta[:want]))))
                warnings.warn(
                    f"Lanczos stopped at {m} iterations with relative residual "
                    f"{worst:.2e} above tol {tol:.2e}",
                    RuntimeWarning, stacklevel=2,
                )
    theta, s = scipy.linalg.eigh_tridiagonal(alphas[:m], betas[:m - 1])
    vecs = basis[:, :m] @ s[:, :want]
    # Guard against drift back into the deflated space, then renormalize.
    vecs = vecs - deflate @ (deflate.T @ vecs)
    norms = np.linalg.norm(vecs, axis=0)
    vecs = vecs / np.where(norms > 0, norms, 1.0)
    return theta[:want].copy(), vecs


def embed_rows(e: Embedding, row_normalize: bool = False) -> np.ndarray:
    """The embedding matrix, optionally with rows scaled to unit norm.

    Zero rows are left untouched; their count is reported via a warning.
    """
    mat = e.matrix.copy()
    if not row_normalize:
        return mat
    norms = np.linalg.norm(mat, axis=1)
    zero_rows = int(np.count_nonzero(norms == 0))
    if zero_rows:
        warnings.warn(f"{zero_rows} zero rows left unnormalized", RuntimeWarning,
                      stacklevel=2)
    mat[norms > 0] /= norms[norms > 0, None]
    return mat
