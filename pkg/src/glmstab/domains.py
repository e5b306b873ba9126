"""Constraint sets: Euclidean balls, quadratic-form balls, l1 balls, boxes.

All four variants are convex, compact, and contain the origin, so projected
methods always have a feasible deterministic starting point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import NotPositiveDefiniteError

MEMBERSHIP_SLACK = 1e-10


@dataclass(frozen=True)
class EuclideanBall:
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"radius must be positive, got {self.r}")


@dataclass(frozen=True)
class L1Ball:
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"radius must be positive, got {self.r}")


@dataclass(frozen=True)
class Box:
    r: float

    def __post_init__(self):
        if self.r <= 0:
            raise ValueError(f"radius must be positive, got {self.r}")


class QuadBall:
    """Ellipsoid ``{w : w^T A w <= r^2}`` for a symmetric PD matrix A.

    The eigendecomposition of A is computed once and cached; projections and
    support evaluations reuse it.
    """

    def __init__(self, A, r: float):
        if r <= 0:
            raise ValueError(f"radius must be positive, got {r}")
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if not np.allclose(A, A.T, rtol=0, atol=1e-10 * max(1.0, float(np.abs(A).max()))):
            raise ValueError("A must be symmetric")
        A = 0.5 * (A + A.T)
        evals, evecs = np.linalg.eigh(A)
        if evals[0] <= 1e-14 * max(evals[-1], 1.0):
            raise NotPositiveDefiniteError(
                f"A has a non-positive eigenvalue {evals[0]}"
            )
        self.A = A
        self.r = float(r)
        self.evals = evals  # ascending
        self.evecs = evecs

    def __repr__(self):
        return f"QuadBall(A={self.A!r}, r={self.r!r})"

    def __eq__(self, other):
        return (
            isinstance(other, QuadBall)
            and self.r == other.r
            and self.A.shape == other.A.shape
            and bool(np.all(self.A == other.A))
        )


Domain = Union[EuclideanBall, QuadBall, L1Ball, Box]


def contains(domain: Domain, w, slack: float = MEMBERSHIP_SLACK) -> bool:
    """Membership test with additive slack on the defining inequality."""
    w = np.asarray(w, dtype=float)
    if isinstance(domain, EuclideanBall):
        return float(np.linalg.norm(w)) <= domain.r + slack
    if isinstance(domain, L1Ball):
        return float(np.abs(w).sum()) <= domain.r + slack
    if isinstance(domain, Box):
        return float(np.abs(w).max(initial=0.0)) <= domain.r + slack
    if isinstance(domain, QuadBall):
        q = float(w @ domain.A @ w)
        return q <= domain.r**2 + slack
    raise TypeError(f"unknown domain {domain!r}")


def support_value(domain: Domain, x) -> float:
    """``max_{w in domain} |w^T x|``, the largest prediction magnitude on x."""
    x = np.asarray(x, dtype=float)
    if isinstance(domain, EuclideanBall):
        return domain.r * float(np.linalg.norm(x))
    if isinstance(domain, L1Ball):
        return domain.r * float(np.abs(x).max(initial=0.0))
    if isinstance(domain, Box):
        return domain.r * float(np.abs(x).sum())
    if isinstance(domain, QuadBall):
        # sup |w.x| over w^T A w <= r^2 equals r * sqrt(x^T A^{-1} x)
        z = domain.evecs.T @ x
        return domain.r * float(np.sqrt(np.sum(z * z / domain.evals)))
    raise TypeError(f"unknown domain {domain!r}")


def prediction_reach(domain: Domain, X) -> float:
    """Largest |w^T x_i| attainable over the domain and the given rows."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        return 0.0
    return max(support_value(domain, x) for x in X)


def dual_domain(instance_norm: str, cap_Y: float, instance_radius: float) -> Domain:
    """Largest domain keeping every prediction within ``[-Y, Y]``.

    With instances in the l2 ball of radius R the answer is the Euclidean
    ball of radius Y/R; with instances in the l-infinity box of radius R it
    is the l1 ball of radius Y/R. Either way ``|w^T x| <= Y`` follows from
    the generalized Cauchy-Schwarz inequality.
    """
    if cap_Y <= 0:
        raise ValueError(f"cap_Y must be positive, got {cap_Y}")
    if instance_radius <= 0:
        raise ValueError(f"instance_radius must be positive, got {instance_radius}")
    norm = instance_norm.lower()
    if norm == "l2":
        return EuclideanBall(cap_Y / instance_radius)
    if norm == "linf":
        return L1Ball(cap_Y / instance_radius)
    raise ValueError(f"unsupported instance norm {instance_norm!r} (use 'l2' or 'linf')")


def domain_to_dict(domain: Domain) -> dict:
    if isinstance(domain, EuclideanBall):
        return {"variant": "euclidean_ball", "r": domain.r}
    if isinstance(domain, L1Ball):
        return {"variant": "l1_ball", "r": domain.r}
    if isinstance(domain, Box):
        return {"variant": "box", "r": domain.r}
    if isinstance(domain, QuadBall):
        return {"variant": "quad_ball", "r": domain.r, "A": domain.A.tolist()}
    raise TypeError(f"unknown domain {domain!r}")


def domain_from_dict(spec: dict) -> Domain:
    variant = spec.get("variant")
    if variant == "euclidean_ball":
        return EuclideanBall(float(spec["r"]))
    if variant == "l1_ball":
        return L1Ball(float(spec["r"]))
    if variant == "box":
        return Box(float(spec["r"]))
    if variant == "quad_ball":
        return QuadBall(np.array(spec["A"], dtype=float), float(spec["r"]))
    raise ValueError(f"unknown domain variant {variant!r}")
