"""Preconditioners: positive-definite changes of coordinates.

A preconditioner P acts on a training set by replacing every instance x with
``P^{-1/2} x`` while the constraint set is mapped through ``P^{1/2}``, so
every prediction ``w^T x`` is preserved. Both square roots come from one
symmetric eigendecomposition and are cached on the object.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .covariance import RANK_TOL, CovarianceSummary
from .data import Dataset
from .domains import Box, Domain, EuclideanBall, L1Ball, QuadBall
from .exceptions import DomainTransformError, NotPositiveDefiniteError

_IDENTITY_TOL = 1e-12


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


@dataclass(frozen=True)
class Preconditioner:
    """A PD matrix P with its symmetric square root and inverse square root."""

    P: np.ndarray
    P_inv_sqrt: np.ndarray
    P_sqrt: np.ndarray
    delta: float = 0.0

    def __post_init__(self):
        d = self.P.shape[0]
        err = np.linalg.norm(self.P_inv_sqrt @ self.P @ self.P_inv_sqrt - np.eye(d))
        if err > 1e-8 * d:
            raise NotPositiveDefiniteError(
                f"inverse square root inconsistent with P (residual {err:.3e})"
            )
        err = np.linalg.norm(self.P_sqrt @ self.P_inv_sqrt - np.eye(d))
        if err > 1e-8 * d:
            raise NotPositiveDefiniteError(
                f"square-root pair inconsistent (residual {err:.3e})"
            )

    @property
    def d(self) -> int:
        return self.P.shape[0]

    def is_identity(self) -> bool:
        d = self.d
        return float(np.linalg.norm(self.P - np.eye(d))) <= _IDENTITY_TOL * d


def _from_spectrum(evals: np.ndarray, evecs: np.ndarray, delta: float) -> Preconditioner:
    P = _sym(evecs @ (evals[:, None] * evecs.T))
    P_sqrt = _sym(evecs @ (np.sqrt(evals)[:, None] * evecs.T))
    P_inv_sqrt = _sym(evecs @ ((1.0 / np.sqrt(evals))[:, None] * evecs.T))
    return Preconditioner(P=P, P_inv_sqrt=P_inv_sqrt, P_sqrt=P_sqrt, delta=delta)


def inverse_sqrt(P, rank_tol: float = RANK_TOL) -> Preconditioner:
    """Build a Preconditioner from a symmetric PD matrix.

    Eigenvalues below ``rank_tol * lambda_max`` mean the matrix is not
    usable as a preconditioner; the caller must delta-complete it first
    (see optimal_preconditioner).
    """
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        raise ValueError(f"P must be square, got shape {P.shape}")
    scale = max(1.0, float(np.abs(P).max()))
    if np.abs(P - P.T).max() > 1e-10 * scale:
        raise ValueError("P must be symmetric (within 1e-10 relative)")
    evals, evecs = np.linalg.eigh(_sym(P))
    if evals[-1] <= 0 or evals[0] < rank_tol * evals[-1]:
        raise NotPositiveDefiniteError(
            f"eigenvalue {evals[0]} below threshold {rank_tol} * {evals[-1]}; "
            "delta-complete the matrix before inverting"
        )
    return _from_spectrum(evals, evecs, delta=0.0)


def optimal_preconditioner(cov: CovarianceSummary, delta: float = 0.0) -> Preconditioner:
    """The conditioning-optimal preconditioner for a covariance summary.

    Full-rank covariance: P is the covariance itself (delta is ignored).
    Rank-deficient: the zero eigenvalues are replaced by ``delta > 0``,
    which fills the null space without touching predictions; the resulting
    preconditioned covariance has condition number equal to the rank.
    """
    evals = cov.eigenvalues.copy()  # descending
    evecs = cov.eigenvectors
    lam_max = float(evals[0]) if evals.size else 0.0
    deficient = cov.rank < cov.d
    if deficient:
        if delta <= 0:
            raise ValueError(
                f"covariance has rank {cov.rank} < d = {cov.d}; a positive "
                f"completion delta is required, got {delta}"
            )
        evals[evals < RANK_TOL * lam_max] = delta
        used_delta = float(delta)
    else:
        used_delta = 0.0
    return _from_spectrum(evals, evecs, delta=used_delta)


def precondition(dataset: Dataset, domain: Domain, pre: Preconditioner) -> tuple[Dataset, Domain]:
    """Apply a preconditioner to a dataset and its constraint set.

    Instances map through ``P^{-1/2}``, the domain through ``P^{1/2}``:
    the Euclidean ball of radius r becomes the ellipsoid ``v^T P^{-1} v <=
    r^2`` and a quadratic-form ball ``w^T A w <= r^2`` becomes ``v^T
    (P^{-1/2} A P^{-1/2}) v <= r^2``. The l1 ball and the box are not closed
    under this map and are rejected for any non-identity P.
    """
    if pre.d != dataset.d:
        raise ValueError(f"preconditioner dimension {pre.d} != data dimension {dataset.d}")
    if pre.is_identity():
        return dataset, domain
    X_P = dataset.X @ pre.P_inv_sqrt
    data_P = Dataset(X=X_P, y=dataset.y, cap_Y=dataset.cap_Y)
    if isinstance(domain, EuclideanBall):
        A_P = _sym(pre.P_inv_sqrt @ pre.P_inv_sqrt)
        return data_P, QuadBall(A_P, domain.r)
    if isinstance(domain, QuadBall):
        A_P = _sym(pre.P_inv_sqrt @ domain.A @ pre.P_inv_sqrt)
        return data_P, QuadBall(A_P, domain.r)
    if isinstance(domain, (L1Ball, Box)):
        raise DomainTransformError(
            f"{type(domain).__name__} is not closed under preconditioning; "
            "only Euclidean and quadratic-form balls can be transformed"
        )
    raise TypeError(f"unknown domain {domain!r}")
