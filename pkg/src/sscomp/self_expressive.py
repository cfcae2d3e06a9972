"""Self-expressive coefficient matrices and the affinity graph built from them.

Each data point is expressed as a sparse (pursuit) or ridge-regularized
(least-squares baseline) combination of the other points; the self column
is excluded by masking, never by copying the data matrix, so memory stays
O(N) beyond the data itself.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse as sp
from scipy.linalg import cho_factor, cho_solve

from .data import Dataset
from .exceptions import ContractViolationError
from .omp import omp_block

DEFAULT_BLOCK_SIZE = 256


def build_coefficient_matrix(
    data: Dataset | np.ndarray,
    k_max: int,
    epsilon: float = 1e-3,
    block_size: int = DEFAULT_BLOCK_SIZE,
    workers: int = 1,
) -> sp.csc_matrix:
    """Pursuit-based self-expression matrix C with zero diagonal.

    Column j is the pursuit solution for point j against all other points,
    re-indexed with a zero at position j.  Points are processed in fixed
    blocks of ``block_size`` columns; blocks may be solved concurrently
    (``workers`` > 1) and the result is identical to the serial build
    because the block partition does not depend on the worker count.
    """
    points = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    n = points.shape[1]
    if n < 2:
        raise ContractViolationError(f"need at least 2 points, got {n}")
    if k_max < 1:
        raise ContractViolationError(f"k_max must be >= 1, got {k_max}")

    starts = list(range(0, n, block_size))

    def solve_block(start: int):
        stop = min(start + block_size, n)
        cols = np.arange(start, stop)
        return omp_block(points, points[:, cols], exclude=cols, k_max=k_max, epsilon=epsilon)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(solve_block, starts))
    else:
        results = [solve_block(s) for s in starts]

    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    for start, (supports, values) in zip(starts, results):
        for offset, (sup, val) in enumerate(zip(supports, values)):
            rows.append(sup)
            cols.append(np.full(sup.size, start + offset, dtype=np.intp))
            vals.append(val)
    row_idx = np.concatenate(rows) if rows else np.zeros(0, dtype=np.intp)
    col_idx = np.concatenate(cols) if cols else np.zeros(0, dtype=np.intp)
    data_vals = np.concatenate(vals) if vals else np.zeros(0)
    matrix = sp.csc_matrix((data_vals, (row_idx, col_idx)), shape=(n, n))
    matrix.sort_indices()
    return matrix


def affinity(coefficients: sp.spmatrix | np.ndarray) -> sp.csr_matrix | np.ndarray:
    """Symmetric nonnegative affinity w_ij = |c_ij| + |c_ji|."""
    if sp.issparse(coefficients):
        c = coefficients.tocsr()
        if c.shape[0] != c.shape[1]:
            raise ContractViolationError(f"coefficient matrix must be square, got {c.shape}")
        if c.diagonal().any():
            raise ContractViolationError("coefficient matrix must have a zero diagonal")
        w = abs(c) + abs(c).T
        return w.tocsr()
    c = np.asarray(coefficients, dtype=float)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ContractViolationError(f"coefficient matrix must be square, got {c.shape}")
    if np.diagonal(c).any():
        raise ContractViolationError("coefficient matrix must have a zero diagonal")
    return np.abs(c) + np.abs(c).T


def lsr_coefficients(data: Dataset | np.ndarray, lam: float) -> np.ndarray:
    """Closed-form ridge self-expression baseline with zero diagonal.

    Column j minimizes ||x_j - X_{-j} c||^2 + lam * ||c||^2, which equals the
    constrained problem over all N coefficients with c_jj = 0.  With
    M = (X^T X + lam*I)^{-1} the solution is c_ij = -M_ij / M_jj for i != j;
    M is evaluated through the D x D Woodbury form so the cost is O(N^2 D)
    rather than O(N^3).
    """
    if lam <= 0:
        raise ContractViolationError(f"lambda must be positive, got {lam}")
    points = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    d, n = points.shape
    # M = (lam*I_N + X^T X)^{-1} = (I_N - X^T (lam*I_D + X X^T)^{-1} X) / lam;
    # the 1/lam factor cancels in -M_ij / M_jj.
    gram_small = points @ points.T
    gram_small[np.diag_indices(d)] += lam
    h = points.T @ cho_solve(cho_factor(gram_small), points)
    denom = 1.0 - np.diagonal(h)
    coeffs = h / denom[np.newaxis, :]
    np.fill_diagonal(coeffs, 0.0)
    return coeffs


def subspace_preserving_mask(
    coefficients: sp.spmatrix | np.ndarray, labels: np.ndarray, threshold: float = 1e-3
) -> np.ndarray:
    """Boolean per-column flags: True when every entry above ``threshold``
    in magnitude points to a column with the same label."""
    labels = np.asarray(labels)
    if sp.issparse(coefficients):
        c = coefficients.tocsc()
        n = c.shape[1]
        if labels.shape != (n,):
            raise ContractViolationError("labels length does not match coefficient matrix")
        keep = np.abs(c.data) > threshold
        rows = c.indices[keep]
        col_of = np.repeat(np.arange(n), np.diff(c.indptr))[keep]
        ok = np.ones(n, dtype=bool)
        np.logical_and.at(ok, col_of, labels[rows] == labels[col_of])
        return ok
    c = np.asarray(coefficients)
    n = c.shape[1]
    if labels.shape != (n,):
        raise ContractViolationError("labels length does not match coefficient matrix")
    big = np.abs(c) > threshold
    same = labels[:, None] == labels[None, :]
    return ~np.any(big & ~same, axis=0)
