"""Greedy orthogonal matching pursuit with deterministic tie-breaking.

The solver selects one dictionary column per iteration, the one whose
absolute dot product with the current residual is largest (ties broken
toward the smallest column index), and re-fits the coefficients on the
selected support by least squares.  The residual is maintained through an
incrementally grown orthogonal basis of the selected columns (modified
Gram-Schmidt with one reorthogonalization pass), so a scan costs O(m*M)
and an update O(m*k).  The basis vectors are kept unnormalized and
projections divide by their stored squared norms: normalizing would
perturb exactly-unit columns by one ulp and could flip ties away from the
exact-arithmetic greedy path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import ContractViolationError

# Numerical stand-in for an exact zero residual; epsilon = 0 means
# "terminate once the residual norm drops to rounding level".
ZERO_RESIDUAL_TOL = 1e-12

# A candidate column whose component orthogonal to the selected span is
# below this is treated as linearly dependent on the span.
_DEGENERATE_TOL = 1e-12


@dataclass
class OmpTrace:
    """Per-iteration record of one pursuit run.

    support holds the selected column indices in selection order;
    residuals holds q_0 .. q_{k*} (q_0 is the target itself); iterations
    is k*; rank_deficient is set when the selected columns became
    numerically dependent (duplicate or dependent dictionary columns).
    """

    support: list[int] = field(default_factory=list)
    residuals: list[np.ndarray] = field(default_factory=list)
    iterations: int = 0
    rank_deficient: bool = False


@dataclass
class SparseCoefficients:
    """Sparse coefficient vector over a dictionary of ``length`` columns."""

    indices: np.ndarray
    values: np.ndarray
    length: int

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.length)
        out[self.indices] = self.values
        return out

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.values))


class SupportSolve(NamedTuple):
    coefficients: np.ndarray
    degenerate: bool


def _check_dictionary(dictionary: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    dictionary = np.asarray(dictionary, dtype=float)
    target = np.asarray(target, dtype=float)
    if dictionary.ndim != 2 or dictionary.shape[0] < 1 or dictionary.shape[1] < 1:
        raise ContractViolationError(
            f"dictionary must be a nonempty 2-D array of column vectors, got shape {dictionary.shape}"
        )
    if target.ndim != 1 or target.shape[0] != dictionary.shape[0]:
        raise ContractViolationError(
            f"target dimension {target.shape} does not match dictionary rows {dictionary.shape[0]}"
        )
    return dictionary, target


def least_squares_on_support(
    dictionary: np.ndarray, target: np.ndarray, support: Sequence[int]
) -> SupportSolve:
    """Minimize ||target - dictionary @ c||_2 over c supported on ``support``.

    Returns the full-length coefficient vector (zeros off the support) and a
    flag that is True when the support columns were numerically dependent,
    in which case the minimum-norm solution is returned.
    """
    dictionary, target = _check_dictionary(dictionary, target)
    support = list(support)
    if len(set(support)) != len(support):
        raise ContractViolationError(f"support indices must be distinct, got {support}")
    coeffs = np.zeros(dictionary.shape[1])
    if not support:
        return SupportSolve(coeffs, False)
    if any(i < 0 or i >= dictionary.shape[1] for i in support):
        raise ContractViolationError(f"support indices out of range: {support}")
    sub = dictionary[:, support]
    sol, _, rank, _ = np.linalg.lstsq(sub, target, rcond=None)
    coeffs[support] = sol
    return SupportSolve(coeffs, rank < len(support))


def omp(
    dictionary: np.ndarray,
    target: np.ndarray,
    k_max: int,
    epsilon: float = 0.0,
) -> tuple[SparseCoefficients, OmpTrace]:
    """Run orthogonal matching pursuit on a single target vector.

    Iterates while fewer than ``k_max`` columns are selected and the
    residual norm exceeds ``epsilon`` (an ``epsilon`` of 0 terminates at
    rounding level, 1e-12).  Each iteration appends argmax_i |a_i . q| to
    the support, ties resolved to the smallest index, and updates the
    residual to the projection error of the target onto the selected span.
    The returned coefficients are the exact least-squares fit on the final
    support; if the selected columns degenerate the minimum-norm solution
    is returned and flagged on the trace.
    """
    dictionary, target = _check_dictionary(dictionary, target)
    if k_max < 1:
        raise ContractViolationError(f"k_max must be >= 1, got {k_max}")
    if epsilon < 0:
        raise ContractViolationError(f"epsilon must be >= 0, got {epsilon}")
    eps = epsilon if epsilon > 0 else ZERO_RESIDUAL_TOL

    m, n_cols = dictionary.shape
    trace = OmpTrace()
    residual = target.copy()
    trace.residuals.append(residual.copy())

    # Orthogonal (unnormalized) basis of the selected columns plus the unit
    # upper-triangular change of basis: column selected at step k equals
    # basis[:, k] + basis[:, :k] @ mix[:k, k].
    max_k = min(k_max, m, n_cols)
    basis = np.empty((m, max_k))
    sq_norms = np.empty(max_k)
    mix = np.zeros((max_k, max_k))
    proj_target = np.empty(max_k)  # basis.T @ target / sq_norms, incrementally
    k = 0

    while k < k_max and np.linalg.norm(residual) > eps:
        if len(trace.support) == n_cols:
            break  # dictionary exhausted
        correlations = np.abs(dictionary.T @ residual)
        if trace.support:
            correlations[trace.support] = -1.0
        pick = int(np.argmax(correlations))  # argmax takes the smallest index on ties
        w = dictionary[:, pick].copy()
        coeffs_k = np.zeros(k)
        for _ in range(2):  # MGS with one reorthogonalization pass
            if k == 0:
                break
            p = (basis[:, :k].T @ w) / sq_norms[:k]
            w -= basis[:, :k] @ p
            coeffs_k += p
        nu = w @ w
        if np.sqrt(nu) <= _DEGENERATE_TOL:
            # Numerically dependent on the selected span; only reachable
            # with a degenerate dictionary.
            trace.rank_deficient = True
            break
        mix[:k, k] = coeffs_k
        basis[:, k] = w
        sq_norms[k] = nu
        proj_target[k] = (w @ target) / nu
        trace.support.append(pick)
        k += 1
        residual = residual - w * ((w @ residual) / nu)
        trace.residuals.append(residual.copy())

    trace.iterations = k

    if trace.rank_deficient:
        full, _ = least_squares_on_support(dictionary, target, trace.support)
        values = full[trace.support]
    elif k > 0:
        values = solve_triangular(mix[:k, :k], proj_target[:k], unit_diagonal=True)
    else:
        values = np.zeros(0)

    support_arr = np.array(trace.support, dtype=np.intp)
    coeffs = SparseCoefficients(indices=support_arr, values=np.asarray(values, dtype=float), length=n_cols)
    return coeffs, trace


def omp_block(
    data: np.ndarray,
    targets: np.ndarray,
    exclude: np.ndarray | None,
    k_max: int,
    epsilon: float,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Vectorized pursuit of many targets against one shared dictionary.

    ``data`` is the m x M dictionary, ``targets`` an m x B block of target
    vectors, ``exclude`` an optional length-B array of one column index per
    target to mask out of the scan (self-column exclusion).  Returns
    per-target support index arrays and coefficient arrays.  The greedy scan
    is one dense GEMM per iteration across the whole block; the projection
    state is updated per column, following the same selection and update
    rules as :func:`omp`.
    """
    m, n_cols = data.shape
    n_tgt = targets.shape[1]
    eps = epsilon if epsilon > 0 else ZERO_RESIDUAL_TOL
    max_k = max(min(k_max, m, n_cols if exclude is None else n_cols - 1), 0)

    residuals = targets.copy()
    basis = np.zeros((n_tgt, m, max_k))
    sq_norms = np.ones((n_tgt, max_k))
    mix = np.zeros((n_tgt, max_k, max_k))
    proj_target = np.zeros((n_tgt, max_k))
    supports = np.zeros((n_tgt, max_k), dtype=np.intp)
    n_selected = np.zeros(n_tgt, dtype=np.intp)
    degenerate = np.zeros(n_tgt, dtype=bool)
    active = np.linalg.norm(residuals, axis=0) > eps

    for k in range(max_k):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        correlations = data.T @ residuals[:, idx]  # M x |idx|
        np.abs(correlations, out=correlations)
        scan_cols = np.arange(idx.size)
        if exclude is not None:
            correlations[exclude[idx], scan_cols] = -1.0
        for pos in range(k):
            correlations[supports[idx, pos], scan_cols] = -1.0
        picks = np.argmax(correlations, axis=0)  # smallest index on ties
        del correlations

        w = data[:, picks].copy()  # m x |idx|
        if k > 0:
            sub_basis = basis[idx, :, :k]  # |idx| x m x k
            coeffs_k = np.zeros((idx.size, k))
            for _ in range(2):  # MGS with one reorthogonalization pass
                p = np.einsum("bmk,mb->bk", sub_basis, w) / sq_norms[idx, :k]
                w -= np.einsum("bmk,bk->bm", sub_basis, p).T
                coeffs_k += p
        nus = np.einsum("mb,mb->b", w, w)

        bad = np.sqrt(nus) <= _DEGENERATE_TOL
        if bad.any():
            degenerate[idx[bad]] = True
            active[idx[bad]] = False
            good = ~bad
            if k > 0:
                coeffs_k = coeffs_k[good]
            idx = idx[good]
            if idx.size == 0:
                continue
            picks, w, nus = picks[good], w[:, good], nus[good]

        if k > 0:
            mix[idx, :k, k] = coeffs_k
        basis[idx, :, k] = w.T
        sq_norms[idx, k] = nus
        proj_target[idx, k] = np.einsum("mb,mb->b", w, targets[:, idx]) / nus
        supports[idx, k] = picks
        n_selected[idx] = k + 1
        residuals[:, idx] -= w * (np.einsum("mb,mb->b", w, residuals[:, idx]) / nus)
        active[idx] = np.linalg.norm(residuals[:, idx], axis=0) > eps

    out_support: list[np.ndarray] = []
    out_values: list[np.ndarray] = []
    for j in range(n_tgt):
        k = int(n_selected[j])
        sup = supports[j, :k].copy()
        if degenerate[j] and k > 0:
            vals = np.linalg.lstsq(data[:, sup], targets[:, j], rcond=None)[0]
        elif k > 0:
            vals = solve_triangular(mix[j, :k, :k], proj_target[j, :k], unit_diagonal=True)
        else:
            vals = np.zeros(0)
        out_support.append(sup)
        out_values.append(np.asarray(vals, dtype=float))
    return out_support, out_values
