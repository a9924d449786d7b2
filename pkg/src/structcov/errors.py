"""Exception hierarchy shared by all structcov modules."""


class StructCovError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(StructCovError, ValueError):
    """An argument violates a documented precondition (shape, range, symmetry)."""


class NotPositiveDefiniteError(InvalidArgumentError):
    """A matrix that must be positive definite symmetric is not."""


class StructuralRankError(InvalidArgumentError):
    """A structure's design matrix is rank deficient."""


class IllConditionedError(StructCovError):
    """A Gram matrix is too ill-conditioned to invert reliably."""


class ConditionViolatedError(StructCovError):
    """A weight family violates the nondegeneracy constants required for the
    limiting variance to exist (gamma1 or gamma1 - k*gamma2 numerically zero)."""


class DegenerateScaleError(StructCovError):
    """The scale normalizer delta2 is numerically zero."""


class QuadratureError(StructCovError):
    """Radial quadrature failed to converge to the requested tolerance."""


class UnsupportedSamplerError(StructCovError):
    """Sampling requested for a spherical law without a shipped sampler."""
