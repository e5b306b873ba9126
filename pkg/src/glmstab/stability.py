"""Average stability of constrained ERM, its bounds, and invariance checks.

The average stability of a training sequence is the mean over held-out
indices of the loss of the leave-one-out minimizer minus the loss of the
full-sample minimizer, both evaluated on the held-out sample. The central
fact this module makes checkable is that this quantity does not change when
the data is preconditioned by any positive-definite matrix, because
predictions themselves are invariant under the paired maps ``x -> P^{-1/2}
x``, ``w -> P^{1/2} w``.

Since solves are only ever epsilon-suboptimal, the exact invariance becomes
a numerical predicate: the reports carry a ``numeric_slack`` bounding how
far each computed stability value can sit from the exact one, and the
invariance checker compares the two coordinate systems within the sum of
their slacks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .covariance import CovarianceSummary, empirical_covariance
from .data import Dataset
from .domains import Domain
from .losses import LossFamily, loss_eval
from .precondition import Preconditioner, inverse_sqrt, precondition
from .solver import SolveResult, erm_solve, loo_solve


@dataclass(frozen=True)
class StabilityReport:
    """Average stability of one training sequence with certified context.

    ``delta`` is the mean of ``delta_i``; the three bound fields are the
    per-sample condition-number bound, its uniform (max over i)
    counterpart, and the value the condition-number bound takes after
    optimal preconditioning. ``numeric_slack`` bounds the error of
    ``delta`` induced by epsilon-suboptimal solves.
    """

    delta: float
    delta_i: np.ndarray
    bound_avg: float
    bound_uniform: float
    bound_preconditioned: float
    solver_tol: float
    numeric_slack: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "delta_i": [float(v) for v in self.delta_i],
            "bound_avg": self.bound_avg,
            "bound_uniform": self.bound_uniform,
            "bound_preconditioned": self.bound_preconditioned,
            "solver_tol": self.solver_tol,
            "numeric_slack": self.numeric_slack,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class InvarianceReport:
    """Comparison of stability before and after one preconditioner."""

    delta_original: float
    delta_preconditioned: float
    abs_diff: float
    tolerance_used: float
    passed: bool
    kappa_before: float
    kappa_after: float

    def to_dict(self) -> dict:
        return {
            "delta_original": self.delta_original,
            "delta_preconditioned": self.delta_preconditioned,
            "abs_diff": self.abs_diff,
            "tolerance_used": self.tolerance_used,
            "pass": self.passed,
            "kappa_before": self.kappa_before,
            "kappa_after": self.kappa_after,
        }


def stability_bound(cov: CovarianceSummary, rho: float, alpha: float, n: int) -> float:
    """Per-sample average-stability bound ``2 rho^2 kappa(C) / (alpha n)``."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    return 2.0 * rho * rho * cov.kappa_C / (alpha * n)


def uniform_stability_bound(dataset: Dataset, rho: float, alpha: float) -> float:
    """Worst-case single-index bound ``max_i 2 rho^2 |x_i|^2 / (n mu)``.

    Uses the instance-wise Lipschitz bound ``rho^2 |x_i|^2`` and the
    curvature lower bound ``mu = alpha * lambda_min_nonzero``; always at
    least the averaged bound since the trace is the mean of the norms.
    """
    if dataset.n < 2:
        raise ValueError(f"need n >= 2, got {dataset.n}")
    cov = empirical_covariance(dataset)
    if cov.rank == 0:
        return 0.0
    mu = alpha * cov.lambda_min_nonzero
    return float(np.max(cov.per_point_norms_sq)) * 2.0 * rho * rho / (dataset.n * mu)


def preconditioned_bound(rho: float, alpha: float, effective_dim: int, n: int) -> float:
    """Stability bound after optimal preconditioning: ``2 rho^2 k / (alpha n)``
    with ``k`` the rank of the covariance (at most d)."""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    if effective_dim < 0:
        raise ValueError(f"effective_dim must be nonnegative, got {effective_dim}")
    return 2.0 * rho * rho * effective_dim / (alpha * n)


def square_loss_excess_bound(cap_Y: float, d: int, n: int) -> float:
    """The square-loss excess-risk bound ``4 Y^2 d / n`` after preconditioning."""
    if cap_Y <= 0 or d < 1 or n < 1:
        raise ValueError(f"invalid arguments ({cap_Y}, {d}, {n})")
    return 4.0 * cap_Y * cap_Y * d / n


def _stability_core(
    dataset: Dataset,
    family: LossFamily,
    domain: Domain,
    tol: float,
    max_iter: int = 200_000,
) -> tuple[StabilityReport, SolveResult, list[SolveResult]]:
    if dataset.n < 2:
        raise ValueError(f"average stability needs n >= 2, got {dataset.n}")
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    cov = empirical_covariance(dataset)
    full = erm_solve(dataset, family, domain, tol=tol, max_iter=max_iter)
    loo = [
        loo_solve(dataset, family, domain, i, tol=tol, warm_start=full.w_hat,
                  max_iter=max_iter)
        for i in range(dataset.n)
    ]

    z_full = dataset.X @ full.w_hat
    delta_i = np.empty(dataset.n)
    for i in range(dataset.n):
        z_i = float(dataset.X[i] @ loo[i].w_hat)
        held_out, _, _ = loss_eval(family, float(dataset.y[i]), z_i)
        at_full, _, _ = loss_eval(family, float(dataset.y[i]), float(z_full[i]))
        delta_i[i] = held_out - at_full
    delta = float(delta_i.mean())

    rho, alpha = family.rho, family.alpha
    bound_avg = stability_bound(cov, rho, alpha, dataset.n)
    bound_uni = uniform_stability_bound(dataset, rho, alpha)
    bound_pre = preconditioned_bound(rho, alpha, cov.rank, dataset.n)

    converged = full.converged and all(res.converged for res in loo)
    if cov.rank == 0:
        slack = 0.0
    else:
        # an eps-suboptimal solve sits within sqrt(2 eps / mu) of the true
        # minimizer along the span, so each loss value errs by at most
        # rho * max|x_i| * sqrt(2 eps / mu); the factor 2 covers both solves.
        # Non-convergence inflates eps to the worst achieved certificate.
        eps_eff = max(tol, full.certificate_eps, *(r.certificate_eps for r in loo))
        mu = alpha * cov.lambda_min_nonzero
        max_norm = math.sqrt(float(np.max(cov.per_point_norms_sq)))
        slack = 2.0 * rho * max_norm * math.sqrt(2.0 * eps_eff / mu)

    report = StabilityReport(
        delta=delta,
        delta_i=delta_i,
        bound_avg=bound_avg,
        bound_uniform=bound_uni,
        bound_preconditioned=bound_pre,
        solver_tol=tol,
        numeric_slack=slack,
        converged=converged,
    )
    return report, full, loo


def average_stability(
    dataset: Dataset,
    family: LossFamily,
    domain: Domain,
    tol: float = 1e-10,
    max_iter: int = 200_000,
) -> StabilityReport:
    """Compute the average stability of ERM on one training sequence.

    Runs the full-sample solve plus n leave-one-out solves (warm-started
    from the full solution) and evaluates each held-out loss difference.
    """
    report, _, _ = _stability_core(dataset, family, domain, tol, max_iter)
    return report


def preconditioned_stability(
    dataset: Dataset,
    family: LossFamily,
    domain: Domain,
    pre: Preconditioner,
    tol: float = 1e-10,
    max_iter: int = 200_000,
) -> StabilityReport:
    """Average stability of the preconditioned training sequence.

    All bound fields are computed from the preconditioned covariance; the
    loss family is unchanged because predictions are.
    """
    data_p, domain_p = precondition(dataset, domain, pre)
    return average_stability(data_p, family, domain_p, tol=tol, max_iter=max_iter)


def invariance_check(
    dataset: Dataset,
    family: LossFamily,
    domain: Domain,
    P_list,
    tol: float = 1e-10,
    max_iter: int = 200_000,
) -> list[InvarianceReport]:
    """Check stability invariance for each preconditioner in ``P_list``.

    Entries may be raw symmetric PD matrices or Preconditioner objects.
    The base stability is computed once; each comparison uses the sum of
    the two numeric slacks plus a 1e-9 floor as its tolerance, and records
    the empirical condition numbers before and after to exhibit the
    conditioning gap the invariance spans.
    """
    base, _, _ = _stability_core(dataset, family, domain, tol, max_iter)
    kappa_before = empirical_covariance(dataset).kappa_C
    reports = []
    for P in P_list:
        pre = P if isinstance(P, Preconditioner) else inverse_sqrt(np.asarray(P, dtype=float))
        data_p, domain_p = precondition(dataset, domain, pre)
        rep_p, _, _ = _stability_core(data_p, family, domain_p, tol, max_iter)
        kappa_after = empirical_covariance(data_p).kappa_C
        abs_diff = abs(rep_p.delta - base.delta)
        tolerance = base.numeric_slack + rep_p.numeric_slack + 1e-9
        reports.append(
            InvarianceReport(
                delta_original=base.delta,
                delta_preconditioned=rep_p.delta,
                abs_diff=abs_diff,
                tolerance_used=tolerance,
                passed=abs_diff <= tolerance,
                kappa_before=kappa_before,
                kappa_after=kappa_after,
            )
        )
    return reports
