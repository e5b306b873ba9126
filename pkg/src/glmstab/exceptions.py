"""Exception types shared across the package."""


class GlmStabError(Exception):
    """Base class for all package-specific errors."""


class DataError(GlmStabError, ValueError):
    """Invalid dataset contents (non-finite entries, label bound violations)."""


class PredictionOutOfRangeError(GlmStabError, ValueError):
    """A prediction fell outside the loss family's certified interval."""


class NotPositiveDefiniteError(GlmStabError, ValueError):
    """A matrix required to be positive definite has a near-zero or negative
    eigenvalue. For covariance matrices, complete the null space first."""


class DomainTransformError(GlmStabError, ValueError):
    """The requested domain cannot be mapped through the preconditioner
    (the image is not representable in the supported constraint families)."""


class SpecError(GlmStabError, ValueError):
    """A distribution spec is internally infeasible."""
