"""Scalar loss families with certified Lipschitz / strong-convexity constants.

A loss family bundles the scalar map ``z -> phi_y(z)`` (with its first two
derivatives) together with the interval of predictions on which its two
constants were certified:

* ``rho``   -- uniform bound on ``|phi_y'(z)|`` over the prediction interval,
* ``alpha`` -- uniform lower bound on ``phi_y''(z)`` over the same interval.

Both constants are uniform in the label ``y`` over ``label_range``. All
stability bounds downstream are valid only when the predictions actually made
stay inside ``prediction_interval``, so the interval is enforced at every
evaluation (with a 1e-9 slack for roundoff).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import PredictionOutOfRangeError

SQUARE = "square"
BOUNDED_LOGISTIC = "bounded_logistic"
CUSTOM = "custom"

_INTERVAL_SLACK = 1e-9
_CERT_SLACK = 1e-12


def _sigmoid(t):
    # numerically stable logistic function, vectorized
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    pos = t >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    e = np.exp(t[~pos])
    out[~pos] = e / (1.0 + e)
    return out


@dataclass(frozen=True)
class LossFamily:
    """A family of scalar losses ``phi_y`` with certified (rho, alpha).

    ``value``, ``deriv`` and ``deriv2`` are vectorized callables ``(y, z)``.
    ``phi2_max`` is an upper estimate of ``phi''`` over the certification
    grid, used only to seed solver step sizes.
    """

    kind: str
    label_range: tuple[float, float]
    prediction_interval: tuple[float, float]
    rho: float
    alpha: float
    value: Callable = field(repr=False)
    deriv: Callable = field(repr=False)
    deriv2: Callable = field(repr=False)
    phi2_max: float = 1.0

    def __post_init__(self):
        if self.rho <= 0 or self.alpha <= 0:
            raise ValueError("rho and alpha must be positive")
        lo, hi = self.prediction_interval
        if not (lo < hi):
            raise ValueError(
                f"prediction interval [{lo}, {hi}] has empty interior"
            )

    def label_grid(self, k: int = 17) -> np.ndarray:
        """Representative labels for certification grids."""
        if self.kind == BOUNDED_LOGISTIC:
            return np.array([-1.0, 1.0])
        lo, hi = self.label_range
        return np.linspace(lo, hi, k)

    def check_predictions(self, z) -> None:
        """Raise unless every entry of ``z`` is inside the widened interval."""
        lo, hi = self.prediction_interval
        z = np.atleast_1d(np.asarray(z, dtype=float))
        bad = (z < lo - _INTERVAL_SLACK) | (z > hi + _INTERVAL_SLACK)
        if np.any(bad):
            j = int(np.argmax(bad))
            raise PredictionOutOfRangeError(
                f"prediction {z[j]!r} outside interval [{lo}, {hi}] "
                f"(widened by {_INTERVAL_SLACK})"
            )


@dataclass(frozen=True)
class ExpConcavityReport:
    """Result of the scalar exp-concavity check ``phi'' >= alpha_bar (phi')^2``."""

    alpha_bar: float
    min_margin: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "alpha_bar": self.alpha_bar,
            "min_margin": self.min_margin,
            "pass": self.passed,
        }


def _grid_certify(family: LossFamily, n_z: int = 257, n_y: int = 17) -> None:
    lo, hi = family.prediction_interval
    z = np.linspace(lo, hi, n_z)
    for y in family.label_grid(n_y):
        d1 = family.deriv(y, z)
        d2 = family.deriv2(y, z)
        if np.max(np.abs(d1)) > family.rho + _CERT_SLACK:
            raise ValueError(
                f"certification failed: |phi'| = {np.max(np.abs(d1))} "
                f"exceeds rho = {family.rho} at y = {y}"
            )
        if np.min(d2) < family.alpha - _CERT_SLACK:
            raise ValueError(
                f"certification failed: phi'' = {np.min(d2)} "
                f"below alpha = {family.alpha} at y = {y}"
            )


def square_family(cap_Y: float, prediction_interval: tuple[float, float] | None = None) -> LossFamily:
    """Square loss ``phi_y(z) = (z - y)^2 / 2`` with labels in ``[-Y, Y]``.

    On the default prediction interval ``[-Y, Y]`` the certified constants
    are ``rho = 2 Y`` and ``alpha = 1``. A wider interval is accepted (for
    domains whose predictions exceed the label cap); rho widens accordingly.
    """
    if cap_Y <= 0:
        raise ValueError(f"cap_Y must be positive, got {cap_Y}")
    if prediction_interval is None:
        prediction_interval = (-cap_Y, cap_Y)
    z_lo, z_hi = prediction_interval
    rho = max(abs(z_lo), abs(z_hi)) + cap_Y
    fam = LossFamily(
        kind=SQUARE,
        label_range=(-cap_Y, cap_Y),
        prediction_interval=(z_lo, z_hi),
        rho=rho,
        alpha=1.0,
        value=lambda y, z: 0.5 * (np.asarray(z, dtype=float) - y) ** 2,
        deriv=lambda y, z: np.asarray(z, dtype=float) - y,
        deriv2=lambda y, z: np.ones_like(np.asarray(z, dtype=float)),
        phi2_max=1.0,
    )
    _grid_certify(fam)
    return fam


def bounded_logistic_family(cap_Y: float, prediction_interval: tuple[float, float] | None = None) -> LossFamily:
    """Logistic loss ``phi_y(z) = log(1 + exp(-y z))`` with labels in {-1, +1}.

    Over predictions in ``[-Y, Y]`` the derivative is bounded by 1 and the
    curvature is at least ``sigma(Y) (1 - sigma(Y))``.
    """
    if cap_Y <= 0:
        raise ValueError(
            f"cap_Y must be positive, got {cap_Y} (prediction interval would "
            "have empty interior)"
        )
    if prediction_interval is None:
        prediction_interval = (-cap_Y, cap_Y)
    z_lo, z_hi = prediction_interval
    z_abs = max(abs(z_lo), abs(z_hi))
    s = float(_sigmoid(z_abs))
    alpha = s * (1.0 - s)

    def value(y, z):
        return np.logaddexp(0.0, -y * np.asarray(z, dtype=float))

    def deriv(y, z):
        return -y * _sigmoid(-y * np.asarray(z, dtype=float))

    def deriv2(y, z):
        p = _sigmoid(y * np.asarray(z, dtype=float))
        return (y * y) * p * (1.0 - p)

    fam = LossFamily(
        kind=BOUNDED_LOGISTIC,
        label_range=(-1.0, 1.0),
        prediction_interval=(z_lo, z_hi),
        rho=1.0,
        alpha=alpha,
        value=value,
        deriv=deriv,
        deriv2=deriv2,
        phi2_max=0.25,
    )
    _grid_certify(fam)
    return fam


def custom_family(
    value: Callable,
    deriv: Callable,
    deriv2: Callable,
    label_range: tuple[float, float],
    prediction_interval: tuple[float, float],
    rho: float,
    alpha: float,
) -> LossFamily:
    """Wrap user-supplied scalar loss callables; constants are grid-certified."""
    fam = LossFamily(
        kind=CUSTOM,
        label_range=label_range,
        prediction_interval=prediction_interval,
        rho=rho,
        alpha=alpha,
        value=value,
        deriv=deriv,
        deriv2=deriv2,
    )
    _grid_certify(fam)
    return fam


def make_family(kind: str, cap_Y: float, prediction_interval=None) -> LossFamily:
    if kind == SQUARE:
        return square_family(cap_Y, prediction_interval)
    if kind == BOUNDED_LOGISTIC:
        return bounded_logistic_family(cap_Y, prediction_interval)
    raise ValueError(f"unknown loss family kind {kind!r}")


def loss_eval(family: LossFamily, y: float, z: float) -> tuple[float, float, float]:
    """Evaluate ``(phi_y(z), phi_y'(z), phi_y''(z))`` at a single point.

    Raises PredictionOutOfRangeError when z leaves the widened interval.
    """
    y_lo, y_hi = family.label_range
    if not (y_lo - _INTERVAL_SLACK <= y <= y_hi + _INTERVAL_SLACK):
        raise ValueError(f"label {y} outside label range [{y_lo}, {y_hi}]")
    family.check_predictions(z)
    v = float(family.value(y, z))
    d1 = float(family.deriv(y, z))
    d2 = float(family.deriv2(y, z))
    if not (math.isfinite(v) and math.isfinite(d1) and math.isfinite(d2)):
        raise ValueError(f"non-finite loss evaluation at (y={y}, z={z})")
    return v, d1, d2


def loss_constants(kind: str, cap_Y: float) -> tuple[float, float]:
    """Certified ``(rho, alpha)`` on the default interval ``[-Y, Y]``.

    Square: ``(2 Y, 1)``. Bounded logistic: ``(1, sigma(Y)(1 - sigma(Y)))``.
    A custom family carries no canonical constants and must supply its own.
    """
    if cap_Y <= 0:
        raise ValueError(
            f"cap_Y must be positive, got {cap_Y} (degenerate prediction interval)"
        )
    if kind == SQUARE:
        return 2.0 * cap_Y, 1.0
    if kind == BOUNDED_LOGISTIC:
        s = float(_sigmoid(cap_Y))
        return 1.0, s * (1.0 - s)
    if kind == CUSTOM:
        raise ValueError("custom loss family has no canonical constants; supply rho and alpha")
    raise ValueError(f"unknown loss family kind {kind!r}")


def exp_concavity_margin(family: LossFamily, grid_size: int = 100) -> ExpConcavityReport:
    """Check the scalar exp-concavity inequality over a dense grid.

    For rank-one Hessians the matrix condition reduces to
    ``phi''(z) >= alpha_bar * phi'(z)^2`` with ``alpha_bar = alpha / rho^2``;
    the report carries the worst margin seen over the grid of predictions
    times label samples.
    """
    if grid_size < 100:
        raise ValueError(f"grid_size must be at least 100, got {grid_size}")
    alpha_bar = family.alpha / family.rho**2
    lo, hi = family.prediction_interval
    z = np.linspace(lo, hi, grid_size)
    min_margin = math.inf
    for y in family.label_grid(grid_size):
        d1 = family.deriv(y, z)
        d2 = family.deriv2(y, z)
        min_margin = min(min_margin, float(np.min(d2 - alpha_bar * d1 * d1)))
    return ExpConcavityReport(
        alpha_bar=alpha_bar,
        min_margin=min_margin,
        passed=min_margin >= -1e-12,
    )


def functional_condition(rho: float, alpha: float) -> float:
    """Ratio ``rho^2 / alpha`` between squared Lipschitz and curvature constants."""
    if rho <= 0 or alpha <= 0:
        raise ValueError(f"rho and alpha must be positive, got ({rho}, {alpha})")
    return rho * rho / alpha
