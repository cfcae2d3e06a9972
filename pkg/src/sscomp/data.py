"""Column-major datasets of unit-norm points with optional ground-truth labels."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ContractViolationError

UNIT_NORM_TOL = 1e-8


@dataclass
class Dataset:
    """A D x N matrix of points (one point per column).

    ``labels``, when present, assigns each column a 0-based subspace index.
    ``metadata`` carries provenance such as generator parameters and seeds.
    """

    points: np.ndarray
    labels: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2:
            raise ContractViolationError(f"points must be 2-D, got shape {self.points.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.intp)
            if self.labels.shape != (self.points.shape[1],):
                raise ContractViolationError(
                    f"labels length {self.labels.shape} does not match {self.points.shape[1]} points"
                )
            if self.labels.size and self.labels.min() < 0:
                raise ContractViolationError("labels must be non-negative")

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[0]

    @property
    def n_points(self) -> int:
        return self.points.shape[1]

    @property
    def n_clusters(self) -> int:
        if self.labels is None:
            raise ContractViolationError("dataset has no ground-truth labels")
        return int(self.labels.max()) + 1


def normalize_columns(matrix: np.ndarray) -> np.ndarray:
    """Scale every column to unit Euclidean norm; reject zero columns."""
    matrix = np.asarray(matrix, dtype=float)
    norms = np.linalg.norm(matrix, axis=0)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ContractViolationError(f"zero-norm column at index {zero[0]}: cannot normalize")
    return matrix / norms


def check_unit_columns(matrix: np.ndarray, tol: float = UNIT_NORM_TOL) -> None:
    norms = np.linalg.norm(matrix, axis=0)
    off = np.abs(norms - 1.0)
    if off.size and off.max() > tol:
        j = int(np.argmax(off))
        raise ContractViolationError(
            f"column {j} has norm {norms[j]:.12g}, expected 1 within {tol:g}"
        )
