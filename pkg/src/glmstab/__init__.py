"""Stability analysis of constrained ERM for generalized linear models.

The package computes the average stability of empirical risk minimization
over constrained domains, its condition-number bounds, and checks
numerically that the stability value is unchanged by positive-definite data
preconditioning, which is what yields dimension- rather than
condition-number-dependent excess-risk bounds.
"""

from .covariance import RANK_TOL, CovarianceSummary, empirical_covariance
from .data import Dataset, load_dataset_csv, save_dataset_csv
from .domains import (
    Box,
    Domain,
    EuclideanBall,
    L1Ball,
    QuadBall,
    contains,
    dual_domain,
    prediction_reach,
)
from .exceptions import (
    DataError,
    DomainTransformError,
    GlmStabError,
    NotPositiveDefiniteError,
    PredictionOutOfRangeError,
    SpecError,
)
from .experiments import (
    DistributionSpec,
    McReport,
    SgdStabilityReport,
    estimate_risk,
    excess_risk_experiment,
    monte_carlo_gap,
    sgd_stability_experiment,
    synth_regression,
)
from .losses import (
    ExpConcavityReport,
    LossFamily,
    bounded_logistic_family,
    custom_family,
    exp_concavity_margin,
    functional_condition,
    loss_constants,
    loss_eval,
    make_family,
    square_family,
)
from .precondition import (
    Preconditioner,
    inverse_sqrt,
    optimal_preconditioner,
    precondition,
)
from .projections import project
from .solver import (
    SgdConfig,
    SolveResult,
    empirical_risk,
    erm_solve,
    loo_solve,
    sgd_solve,
)
from .stability import (
    InvarianceReport,
    StabilityReport,
    average_stability,
    invariance_check,
    preconditioned_bound,
    preconditioned_stability,
    square_loss_excess_bound,
    stability_bound,
    uniform_stability_bound,
)

__version__ = "0.1.0"

__all__ = [
    "RANK_TOL",
    "CovarianceSummary",
    "empirical_covariance",
    "Dataset",
    "load_dataset_csv",
    "save_dataset_csv",
    "Box",
    "Domain",
    "EuclideanBall",
    "L1Ball",
    "QuadBall",
    "contains",
    "dual_domain",
    "prediction_reach",
    "DataError",
    "DomainTransformError",
    "GlmStabError",
    "NotPositiveDefiniteError",
    "PredictionOutOfRangeError",
    "SpecError",
    "DistributionSpec",
    "McReport",
    "SgdStabilityReport",
    "estimate_risk",
    "excess_risk_experiment",
    "monte_carlo_gap",
    "sgd_stability_experiment",
    "synth_regression",
    "ExpConcavityReport",
    "LossFamily",
    "bounded_logistic_family",
    "custom_family",
    "exp_concavity_margin",
    "functional_condition",
    "loss_constants",
    "loss_eval",
    "make_family",
    "square_family",
    "Preconditioner",
    "inverse_sqrt",
    "optimal_preconditioner",
    "precondition",
    "project",
    "SgdConfig",
    "SolveResult",
    "empirical_risk",
    "erm_solve",
    "loo_solve",
    "sgd_solve",
    "InvarianceReport",
    "StabilityReport",
    "average_stability",
    "invariance_check",
    "preconditioned_bound",
    "preconditioned_stability",
    "square_loss_excess_bound",
    "stability_bound",
    "uniform_stability_bound",
]
