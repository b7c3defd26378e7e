"""Shared eigenspectrum container with clusters and quality enforcement."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import SolverError

RESIDUAL_TOL = 1e-8


def cluster_indices(
    eigenvalues: np.ndarray,
    error_estimates: np.ndarray,
    first_index: int,
    rel_floor: float = 1e-6,
) -> list[list[int]]:
    """Group consecutive eigenvalues that are numerically indistinguishable.

    Two neighbors join a cluster when their gap is below
    max(3 * (err_i + err_j), rel_floor * max(1, value)).  Indices in the
    returned groups are mathematical ones (offset by ``first_index``); the
    zero mode of a pure Neumann problem is never clustered with mu_1.
    """
    groups: list[list[int]] = []
    start = 1 if first_index == 0 else 0
    if first_index == 0:
        groups.append([0])
    current = [start + first_index] if len(eigenvalues) > start else []
    for i in range(start + 1, len(eigenvalues)):
        gap = eigenvalues[i] - eigenvalues[i - 1]
        tol = max(
            3.0 * (error_estimates[i] + error_estimates[i - 1]),
            rel_floor * max(1.0, abs(eigenvalues[i])),
        )
        if gap <= tol:
            current.append(i + first_index)
        else:
            groups.append(current)
            current = [i + first_index]
    if current:
        groups.append(current)
    return groups


@dataclass
class EigenSpectrum:
    """Ascending eigenpairs with Richardson error bars and clusters.

    ``first_index`` is the mathematical index of ``eigenvalues[0]``: 0 for
    pure Neumann spectra (the constant mode), 1 for constrained problems.
    ``vectors[:, i]`` are mass-orthonormal nodal coefficients.
    """

    eigenvalues: np.ndarray
    vectors: np.ndarray
    error_estimates: np.ndarray
    residuals: np.ndarray
    clusters: list[list[int]]
    first_index: int = 0
    mesh: Any = None
    grid: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def value(self, k: int) -> float:
        """Eigenvalue by mathematical index (mu_k or lambda_k)."""
        i = k - self.first_index
        if i < 0 or i >= len(self.eigenvalues):
            raise IndexError(f"index {k} outside computed spectrum")
        return float(self.eigenvalues[i])

    def error(self, k: int) -> float:
        return float(self.error_estimates[k - self.first_index])

    def vector(self, k: int) -> np.ndarray:
        return self.vectors[:, k - self.first_index]

    def cluster_of(self, k: int) -> list[int]:
        for group in self.clusters:
            if k in group:
                return group
        raise IndexError(f"index {k} not in any cluster")


def finalize_pairs(
    eigenvalues: np.ndarray,
    vectors: np.ndarray,
    K,
    M,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sort, M-orthonormalize, fix signs, and measure residuals."""
    order = np.argsort(eigenvalues)
    eigenvalues = np.asarray(eigenvalues, dtype=float)[order]
    vectors = np.asarray(vectors, dtype=float)[:, order]
    mv = M @ vectors
    gram = vectors.T @ mv
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise SolverError("eigenvector Gram matrix not positive definite") from exc
    vectors = np.linalg.solve(chol, vectors.T).T
    mv = M @ vectors
    for i in range(vectors.shape[1]):
        anchor = int(np.argmax(np.abs(vectors[:, i])))
        if vectors[anchor, i] < 0.0:
            vectors[:, i] = -vectors[:, i]
            mv[:, i] = -mv[:, i]
    kv = K @ vectors
    residuals = np.array(
        [
            np.linalg.norm(kv[:, i] - eigenvalues[i] * mv[:, i])
            / max(np.linalg.norm(mv[:, i]), 1e-300)
            for i in range(vectors.shape[1])
        ]
    )
    # Mass-normalized residuals cannot beat the conditioning floor
    # eps * ||K|| / ||M|| on fine grids; allow for it explicitly.
    norm_k = float(np.max(np.abs(K).sum(axis=1)))
    norm_m = float(np.max(np.abs(M).sum(axis=1)))
    floor = 200.0 * np.finfo(float).eps * norm_k / max(norm_m, 1e-300)
    allowed = RESIDUAL_TOL * np.maximum(1.0, np.abs(eigenvalues)) + floor
    if np.any(residuals > allowed):
        worst = float(np.max(residuals))
        raise SolverError(f"eigenpair residual {worst:.3e} exceeds tolerance")
    return eigenvalues, vectors, residuals
