"""Exact Euclidean projections onto the supported constraint sets.

Interior points are returned unchanged; projection is total (never raises
for finite inputs).
"""

from __future__ import annotations

import numpy as np

from .domains import Box, Domain, EuclideanBall, L1Ball, QuadBall

_SECULAR_REL_TOL = 1e-12
_MAX_NEWTON = 200


def _project_l1(v: np.ndarray, r: float) -> np.ndarray:
    # Duchi et al. sort-and-threshold projection onto the l1 ball.
    a = np.abs(v)
    if a.sum() <= r:
        return v.copy()
    u = np.sort(a)[::-1]
    cum = np.cumsum(u) - r
    k = np.arange(1, u.size + 1)
    idx = np.nonzero(u - cum / k > 0)[0]
    rho = idx[-1]
    theta = cum[rho] / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def _project_quad(domain: QuadBall, p: np.ndarray, t0: float = 0.0) -> tuple[np.ndarray, float]:
    """Project onto the ellipsoid; returns (point, multiplier).

    ``t0`` seeds the multiplier search (consecutive projections of nearby
    points share nearly the same multiplier).
    """
    lam = domain.evals  # ascending, all positive
    U = domain.evecs
    r2 = domain.r**2
    z = U.T @ p
    lz2 = lam * z * z
    if float(lz2.sum()) <= r2 * (1.0 + 1e-14):
        return p.copy(), 0.0

    # Secular equation sum_i lam_i z_i^2 / (1 + t lam_i)^2 = r^2 for t >= 0.
    # The left side is convex and decreasing in t, so Newton from the left
    # of the root converges monotonically; a bisection bracket guards it.
    def value_slope(t):
        denom = 1.0 + t * lam
        q = lz2 / (denom * denom)
        return float(q.sum()) - r2, -2.0 * float((lam * q / denom).sum())

    lo = 0.0
    hi = math.inf
    t = t0 if t0 > 0.0 else max(1.0 / float(lam[-1]), 1.0)
    f, fp = value_slope(t)
    for _ in range(_MAX_NEWTON):
        if f > 0.0:
            lo = t
        else:
            hi = t
        if abs(f) <= _SECULAR_REL_TOL * r2:
            break
        t_new = t - f / fp
        if math.isinf(hi):
            if t_new <= lo:
                t_new = 2.0 * t
        elif not (lo < t_new < hi):
            t_new = 0.5 * (lo + hi)
        if not math.isinf(hi) and hi - lo <= 1e-16 * (1.0 + hi):
            break
        t = t_new
        f, fp = value_slope(t)
    return U @ (z / (1.0 + t * lam)), t


def project(domain: Domain, point) -> np.ndarray:
    """Euclidean projection of ``point`` onto ``domain``."""
    p = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError("cannot project a non-finite point")
    if isinstance(domain, EuclideanBall):
        nrm = float(np.linalg.norm(p))
        if nrm <= domain.r:
            return p.copy()
        return p * (domain.r / nrm)
    if isinstance(domain, Box):
        return np.clip(p, -domain.r, domain.r)
    if isinstance(domain, L1Ball):
        return _project_l1(p, domain.r)
    if isinstance(domain, QuadBall):
        w, _ = _project_quad(domain, p)
        return w
    raise TypeError(f"unknown domain {domain!r}")


class projector:
    """Callable projection onto a fixed domain, keeping warm-start state.

    For ellipsoids the Lagrange multiplier of the previous call seeds the
    next secular solve; for the other variants this is plain projection.
    """

    def __init__(self, domain: Domain):
        self.domain = domain
        self._is_quad = isinstance(domain, QuadBall)
        self._t = 0.0

    def __call__(self, p: np.ndarray) -> np.ndarray:
        if self._is_quad:
            w, self._t = _project_quad(self.domain, p, self._t)
            return w
        return project(self.domain, p)


def project(domain: Domain, point) -> np.ndarray:
    """Euclidean projection of ``point`` onto ``domain``."""
    p = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError("cannot project a non-finite point")
    if isinstance(domain, EuclideanBall):
        nrm = float(np.linalg.norm(p))
        if nrm <= domain.r:
            return p.copy()
        return p * (domain.r / nrm)
    if isinstance(domain, Box):
        return np.clip(p, -domain.r, domain.r)
    if isinstance(domain, L1Ball):
        return _project_l1(p, domain.r)
    if isinstance(domain, QuadBall):
        return _project_quad(domain, p)
    raise TypeError(f"unknown domain {domain!r}")
