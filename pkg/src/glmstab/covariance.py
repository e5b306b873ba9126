"""Empirical covariance summaries and the empirical condition number.

The condition number used throughout is trace over the smallest *nonzero*
eigenvalue; "nonzero" is decided by a relative threshold RANK_TOL on the
largest eigenvalue, since floating point never produces exact zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .exceptions import DataError

RANK_TOL = 1e-10


@dataclass(frozen=True)
class CovarianceSummary:
    """Spectral summary of ``C_hat = (1/n) sum_i x_i x_i^T``.

    ``eigenvalues`` are sorted descending and clamped at zero from below;
    ``eigenvectors`` holds the matching eigenvectors as columns. ``rank``
    counts eigenvalues at least ``RANK_TOL * lambda_max``; ``kappa_C`` is
    trace over the smallest eigenvalue that survives that cut (0 for an
    all-zero matrix).
    """

    C_hat: np.ndarray
    trace: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    rank: int
    lambda_min_nonzero: float
    kappa_C: float
    per_point_norms_sq: np.ndarray
    n: int

    @property
    def d(self) -> int:
        return self.C_hat.shape[0]

    def span_basis(self) -> np.ndarray:
        """Orthonormal basis (d x rank) of the span of the data."""
        return self.eigenvectors[:, : self.rank]


def _covariance_from_rows(X: np.ndarray) -> CovarianceSummary:
    n = X.shape[0]
    C = X.T @ X / n
    C = 0.5 * (C + C.T)
    evals, evecs = np.linalg.eigh(C)
    evals = np.maximum(evals[::-1], 0.0)
    evecs = evecs[:, ::-1]
    lam_max = float(evals[0]) if evals.size else 0.0
    if lam_max <= 0.0:
        rank = 0
        lam_min_nz = 0.0
        kappa = 0.0
    else:
        nonzero = evals >= RANK_TOL * lam_max
        rank = int(np.count_nonzero(nonzero))
        lam_min_nz = float(evals[rank - 1])
        kappa = float(np.trace(C)) / lam_min_nz
    return CovarianceSummary(
        C_hat=C,
        trace=float(np.trace(C)),
        eigenvalues=evals,
        eigenvectors=np.ascontiguousarray(evecs),
        rank=rank,
        lambda_min_nonzero=lam_min_nz,
        kappa_C=kappa,
        per_point_norms_sq=np.einsum("ij,ij->i", X, X),
        n=n,
    )


def empirical_covariance(dataset: Dataset) -> CovarianceSummary:
    """Covariance summary of a dataset (symmetric eigendecomposition)."""
    if not np.all(np.isfinite(dataset.X)):
        raise DataError("dataset contains non-finite entries")
    return _covariance_from_rows(dataset.X)
