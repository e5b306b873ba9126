"""Synthetic-data experiments: generation, risk estimation, Monte Carlo checks.

The generator draws instances on an ellipsoid shell with a controlled
spectrum (so the empirical condition number is steerable over orders of
magnitude) and labels from a clipped linear model. Everything is driven by
the Philox streams in :mod:`glmstab.rng`: a fixed (spec, seed) pair
reproduces every dataset, every fresh risk sample, and every report bit for
bit, and trials remain independent when executed in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .covariance import empirical_covariance
from .data import Dataset
from .domains import Domain, dual_domain
from .exceptions import SpecError
from .losses import BOUNDED_LOGISTIC, SQUARE, LossFamily, make_family
from .rng import child_seed, stream
from .solver import SgdConfig, erm_solve, sgd_solve
from .stability import (
    _stability_core,
    preconditioned_bound,
    square_loss_excess_bound,
)


@dataclass(frozen=True)
class DistributionSpec:
    """Sampling distribution for synthetic constrained-regression problems.

    Instances are ``x = diag(sqrt(s)) g`` with ``g`` uniform on the unit
    sphere and the spectrum ``s`` rescaled so the largest attainable
    instance norm equals ``instance_radius``; the spectrum therefore sets
    the shape of the second-moment matrix (along the coordinate axes) while
    the radius sets its scale. Labels are ``w*.x`` plus Gaussian noise,
    clamped into ``[-cap_Y, cap_Y]`` (the clamping is part of the
    distribution). ``w*`` is ``w_star_direction``, a unit vector, and must
    be feasible for the dual domain of (instance_norm, cap_Y, radius).
    """

    d: int
    spectrum: tuple[float, ...]
    w_star_direction: tuple[float, ...]
    noise_sigma: float
    cap_Y: float
    instance_norm: str = "l2"
    instance_radius: float = 1.0
    family_kind: str = SQUARE

    def __post_init__(self):
        if self.d < 1:
            raise SpecError(f"d must be at least 1, got {self.d}")
        spec = tuple(float(v) for v in self.spectrum)
        if len(spec) != self.d:
            raise SpecError(f"spectrum must have length d = {self.d}")
        if any(v <= 0 for v in spec):
            raise SpecError("spectrum entries must be positive")
        if any(spec[i] < spec[i + 1] for i in range(len(spec) - 1)):
            raise SpecError("spectrum must be sorted descending")
        w = np.asarray(self.w_star_direction, dtype=float)
        if w.shape != (self.d,):
            raise SpecError(f"w_star_direction must have length d = {self.d}")
        nrm = float(np.linalg.norm(w))
        if not math.isclose(nrm, 1.0, rel_tol=0, abs_tol=1e-8):
            raise SpecError(f"w_star_direction must be a unit vector, |w| = {nrm}")
        object.__setattr__(self, "spectrum", spec)
        object.__setattr__(self, "w_star_direction", tuple(float(v) for v in w / nrm))
        if self.noise_sigma < 0:
            raise SpecError(f"noise_sigma must be nonnegative, got {self.noise_sigma}")
        if self.cap_Y <= 0:
            raise SpecError(f"cap_Y must be positive, got {self.cap_Y}")
        if self.instance_norm not in ("l2", "linf"):
            raise SpecError(f"instance_norm must be 'l2' or 'linf', got {self.instance_norm!r}")
        if self.instance_radius <= 0:
            raise SpecError(f"instance_radius must be positive, got {self.instance_radius}")
        if self.family_kind not in (SQUARE, BOUNDED_LOGISTIC):
            raise SpecError(f"unsupported family kind {self.family_kind!r}")
        self._check_w_star_feasible()

    def _check_w_star_feasible(self):
        w = np.asarray(self.w_star_direction)
        if self.instance_norm == "l2":
            reach = self.instance_radius * float(np.linalg.norm(w))
        else:
            reach = self.instance_radius * float(np.abs(w).sum())
        if reach > self.cap_Y * (1 + 1e-12):
            raise SpecError(
                f"w* can produce predictions up to {reach} > cap_Y = {self.cap_Y}; "
                "shrink the instance radius or use a smaller w* scale"
            )

    @property
    def w_star(self) -> np.ndarray:
        return np.asarray(self.w_star_direction, dtype=float)

    def scaled_spectrum(self) -> np.ndarray:
        s = np.asarray(self.spectrum, dtype=float)
        return s * (self.instance_radius**2 / s[0])

    def domain(self) -> Domain:
        return dual_domain(self.instance_norm, self.cap_Y, self.instance_radius)

    def family(self) -> LossFamily:
        return make_family(self.family_kind, self.cap_Y)

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "spectrum": list(self.spectrum),
            "w_star_direction": list(self.w_star_direction),
            "noise_sigma": self.noise_sigma,
            "cap_Y": self.cap_Y,
            "instance_norm": self.instance_norm,
            "instance_radius": self.instance_radius,
            "family_kind": self.family_kind,
        }

    @classmethod
    def from_dict(cls, cfg: dict) -> "DistributionSpec":
        cfg = dict(cfg)
        d = int(cfg["d"])
        if "w_star_direction" not in cfg:
            w = np.zeros(d)
            w[0] = 1.0
            cfg["w_star_direction"] = w.tolist()
        return cls(
            d=d,
            spectrum=tuple(cfg["spectrum"]),
            w_star_direction=tuple(cfg["w_star_direction"]),
            noise_sigma=float(cfg.get("noise_sigma", 0.0)),
            cap_Y=float(cfg["cap_Y"]),
            instance_norm=str(cfg.get("instance_norm", "l2")),
            instance_radius=float(cfg.get("instance_radius", 1.0)),
            family_kind=str(cfg.get("family_kind", SQUARE)),
        )


@dataclass(frozen=True)
class McReport:
    """Aggregates of a Monte Carlo run: generalization gap, stability, excess.

    ``mean_gap`` averages ``L(w_hat) - Lhat(w_hat)``; ``mean_delta``
    averages the per-trial average stability; ``mean_excess`` averages
    ``L(w_hat) - L(w_ref)`` against a fixed oracle reference. Standard
    errors are sample standard deviations over trials divided by
    sqrt(trials). The gap is evaluated on the same size-n sample used for
    the stability value; the exact expectation identity pairs a size-(n-1)
    gap with a size-n stability, an O(1/n) mismatch absorbed by the
    statistical tolerances.
    """

    trials: int
    mean_gap: float
    se_gap: float
    mean_delta: float
    se_delta: float
    mean_excess: float
    se_excess: float
    bound_preconditioned: float
    bound_unpreconditioned_mean: float

    def to_dict(self) -> dict:
        return {
            "trials": self.trials,
            "mean_gap": self.mean_gap,
            "se_gap": self.se_gap,
            "mean_delta": self.mean_delta,
            "se_delta": self.se_delta,
            "mean_excess": self.mean_excess,
            "se_excess": self.se_excess,
            "bound_preconditioned": self.bound_preconditioned,
            "bound_unpreconditioned_mean": self.bound_unpreconditioned_mean,
            "note": "gap evaluated at sample size n; the exact identity uses n-1 (O(1/n) mismatch)",
        }


@dataclass(frozen=True)
class SgdStabilityReport(McReport):
    """McReport for SGD outputs, plus the measured suboptimality and the
    coordinate-dependent uniform-stability bound it is compared against."""

    measured_eps_mean: float = 0.0
    hardt_style_bound: float = 0.0

    def to_dict(self) -> dict:
        out = super().to_dict()
        out["measured_eps_mean"] = self.measured_eps_mean
        out["hardt_style_bound"] = self.hardt_style_bound
        return out


def synth_regression(spec: DistributionSpec, n: int, seed: int) -> Dataset:
    """Draw a dataset of n samples from the spec's distribution.

    Deterministic under (spec, n, seed); the stream key scheme is
    documented in :mod:`glmstab.rng`.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = stream(seed, "gen")
    X = _sample_instances(spec, n, rng)
    y = _sample_labels(spec, X, rng)
    return Dataset(X=X, y=y, cap_Y=spec.cap_Y)


def _sample_instances(spec: DistributionSpec, n: int, rng) -> np.ndarray:
    g = rng.standard_normal((n, spec.d))
    norms = np.linalg.norm(g, axis=1)
    norms[norms == 0] = 1.0
    g /= norms[:, None]
    return g * np.sqrt(spec.scaled_spectrum())


def _sample_labels(spec: DistributionSpec, X: np.ndarray, rng) -> np.ndarray:
    raw = X @ spec.w_star
    if spec.noise_sigma > 0:
        raw = raw + spec.noise_sigma * rng.standard_normal(X.shape[0])
    if spec.family_kind == BOUNDED_LOGISTIC:
        if spec.cap_Y < 1.0:
            raise SpecError("bounded_logistic labels are +-1 and need cap_Y >= 1")
        y = np.where(raw >= 0, 1.0, -1.0)
        return y
    return np.clip(raw, -spec.cap_Y, spec.cap_Y)


def estimate_risk(
    spec: DistributionSpec,
    family: LossFamily,
    w,
    m_test: int,
    seed: int,
) -> tuple[float, float]:
    """Fresh-sample Monte Carlo estimate of the true risk of ``w``."""
    if m_test < 1000:
        raise ValueError(f"m_test must be at least 1000, got {m_test}")
    w = np.asarray(w, dtype=float)
    rng = stream(seed, "risk")
    X = _sample_instances(spec, m_test, rng)
    y = _sample_labels(spec, X, rng)
    z = X @ w
    family.check_predictions(z)
    vals = family.value(y, z)
    return float(vals.mean()), float(np.std(vals, ddof=1) / math.sqrt(m_test))


def _map_indexed(fn, count: int, threads: int):
    """Apply fn to 0..count-1, collecting results in index order."""
    if threads <= 1:
        return [fn(k) for k in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def _default_precond_bound(spec: DistributionSpec, family: LossFamily, n: int) -> float:
    if spec.family_kind == SQUARE:
        return square_loss_excess_bound(spec.cap_Y, spec.d, n)
    return preconditioned_bound(family.rho, family.alpha, spec.d, n)


def _reference_predictor(spec, family, domain, n, tol, seed):
    ref_data = synth_regression(spec, 50 * n, child_seed(seed, "ref"))
    return erm_solve(ref_data, family, domain, tol=min(tol, 1e-10)).w_hat


def monte_carlo_gap(
    spec: DistributionSpec,
    n: int,
    trials: int,
    tol: float,
    seed: int,
    m_test: int = 100_000,
    threads: int = 1,
) -> McReport:
    """Monte Carlo estimate of the gap/stability identity and the excess risk.

    Per trial: draw a size-n sample, solve the ERM and its n leave-one-out
    variants, and record the average stability, the generalization gap of
    the ERM output (fresh-sample risk minus training risk), and the excess
    risk against a fixed reference predictor fit on an independent sample
    of size 50 n (a proxy for the population optimum).
    """
    if trials < 30:
        raise ValueError(f"trials must be at least 30, got {trials}")
    family = spec.family()
    domain = spec.domain()
    w_ref = _reference_predictor(spec, family, domain, n, tol, seed)
    risk_ref, _ = estimate_risk(spec, family, w_ref, m_test, child_seed(seed, "ref", 1))

    def one_trial(k: int):
        data = synth_regression(spec, n, child_seed(seed, "trial", k))
        report, full, _ = _stability_core(data, family, domain, tol)
        risk_hat, _ = estimate_risk(spec, family, full.w_hat, m_test,
                                    child_seed(seed, "trial", k, 1))
        gap = risk_hat - full.objective
        excess = risk_hat - risk_ref
        return gap, report.delta, excess, report.bound_avg

    rows = _map_indexed(one_trial, trials, threads)
    gaps, deltas, excesses, bounds = (np.array(col) for col in zip(*rows))
    sq = math.sqrt(trials)
    return McReport(
        trials=trials,
        mean_gap=float(gaps.mean()),
        se_gap=float(np.std(gaps, ddof=1) / sq),
        mean_delta=float(deltas.mean()),
        se_delta=float(np.std(deltas, ddof=1) / sq),
        mean_excess=float(excesses.mean()),
        se_excess=float(np.std(excesses, ddof=1) / sq),
        bound_preconditioned=_default_precond_bound(spec, family, n),
        bound_unpreconditioned_mean=float(bounds.mean()),
    )


def excess_risk_experiment(
    spec: DistributionSpec,
    n_grid,
    trials: int,
    tol: float,
    seed: int,
    m_test: int = 100_000,
    threads: int = 1,
) -> list[tuple[int, McReport]]:
    """Run monte_carlo_gap for each n in the grid; one (n, report) row each."""
    rows = []
    for n in n_grid:
        if n < 2:
            raise ValueError(f"every grid point needs n >= 2, got {n}")
        rows.append(
            (int(n),
             monte_carlo_gap(spec, int(n), trials, tol,
                             child_seed(seed, "grid", int(n)),
                             m_test=m_test, threads=threads))
        )
    return rows


def sgd_stability_experiment(
    spec: DistributionSpec,
    n: int,
    sgd_config: SgdConfig,
    trials: int,
    seed: int,
    m_test: int = 100_000,
    threads: int = 1,
) -> SgdStabilityReport:
    """Stability of SGD outputs used in place of exact minimizers.

    Per trial the full-sample and every leave-one-out problem are solved by
    projected SGD (independent index streams), the stability formula is
    evaluated on those outputs, and the full-sample measured suboptimality
    is recorded. The report juxtaposes the result with the
    coordinate-dependent bound ``max_i 2 rho^2 |x_i|^2 / (gamma n)``
    (gamma = alpha * lambda_min_nonzero) and with the preconditioned bound.
    """
    if trials < 30:
        raise ValueError(f"trials must be at least 30, got {trials}")
    family = spec.family()
    domain = spec.domain()
    tol = 1e-10
    w_ref = _reference_predictor(spec, family, domain, n, tol, seed)
    risk_ref, _ = estimate_risk(spec, family, w_ref, m_test, child_seed(seed, "ref", 1))
    rho, alpha = family.rho, family.alpha

    def one_trial(k: int):
        data = synth_regression(spec, n, child_seed(seed, "trial", k))
        cov = empirical_covariance(data)
        full_cfg = replace(sgd_config, seed=child_seed(sgd_config.seed, "trial", k, 0))
        full = sgd_solve(data, family, domain, full_cfg)
        delta_i = np.empty(n)
        for i in range(n):
            X_i = np.delete(data.X, i, axis=0)
            y_i = np.delete(data.y, i, axis=0)
            if n == 2:
                # a single remaining sample: duplicate it, which leaves both
                # the objective and the sampling distribution unchanged
                X_i = np.vstack([X_i, X_i])
                y_i = np.hstack([y_i, y_i])
            loo_data = Dataset(X=X_i, y=y_i, cap_Y=data.cap_Y)
            cfg_i = replace(sgd_config, seed=child_seed(sgd_config.seed, "trial", k, i + 1))
            res_i = sgd_solve(loo_data, family, domain, cfg_i)
            z_i = float(data.X[i] @ res_i.w_hat)
            z_full = float(data.X[i] @ full.w_hat)
            delta_i[i] = float(family.value(data.y[i], z_i)) - float(
                family.value(data.y[i], z_full))
        delta = float(delta_i.mean())
        risk_hat, _ = estimate_risk(spec, family, full.w_hat, m_test,
                                    child_seed(seed, "trial", k, 10**6))
        gap = risk_hat - full.objective
        excess = risk_hat - risk_ref
        mu = alpha * cov.lambda_min_nonzero
        hardt = (float(np.max(cov.per_point_norms_sq)) * 2.0 * rho * rho / (n * mu)
                 if cov.rank > 0 else 0.0)
        bound_avg = 2.0 * rho * rho * cov.kappa_C / (alpha * n)
        return gap, delta, excess, full.certificate_eps, hardt, bound_avg

    rows = _map_indexed(one_trial, trials, threads)
    gaps, deltas, excesses, eps_vals, hardts, bounds = (np.array(c) for c in zip(*rows))
    sq = math.sqrt(trials)
    return SgdStabilityReport(
        trials=trials,
        mean_gap=float(gaps.mean()),
        se_gap=float(np.std(gaps, ddof=1) / sq),
        mean_delta=float(deltas.mean()),
        se_delta=float(np.std(deltas, ddof=1) / sq),
        mean_excess=float(excesses.mean()),
        se_excess=float(np.std(excesses, ddof=1) / sq),
        bound_preconditioned=_default_precond_bound(spec, family, n),
        bound_unpreconditioned_mean=float(bounds.mean()),
        measured_eps_mean=float(eps_vals.mean()),
        hardt_style_bound=float(hardts.mean()),
    )
