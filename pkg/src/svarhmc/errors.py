"""Typed exceptions shared across the engine.

Numerical failures inside the sampler (bad Cholesky pivot, singular impact
matrix) must surface as typed errors so callers can turn them into rejected
proposals instead of corrupted state.
"""


class SvarError(Exception):
    """Base class for all engine errors."""


class NotPositiveDefinite(SvarError):
    """A matrix that must be SPD has a non-positive pivot."""


class SingularTriangular(SvarError):
    """A triangular solve hit a zero diagonal entry."""


class NumericallySingular(SvarError):
    """A matrix required to be invertible is singular within guard."""


class SingularImpact(SvarError):
    """The impact matrix B is singular or violates det(B) > 0."""


class DegeneratePosterior(SvarError):
    """Posterior update produced a non-SPD scale or design matrix."""


class SchemaError(SvarError):
    """A restriction schema violates a feasibility rule."""


class LayoutMismatch(SvarError):
    """A parameter vector does not match the compiled schema layout."""


class OutsideRestrictedSet(SvarError):
    """Structural parameters violate a restriction they must satisfy."""


class InsufficientDraws(SvarError):
    """Too few draws to compute the requested statistic."""


class SingularCovariance(SvarError):
    """A covariance determinant underflowed in the multivariate ESS."""


class InitFailed(SvarError):
    """Restriction-compatible initialization exhausted its try budget."""


class Exhausted(SvarError):
    """Accept-reject sampling hit max_tries before collecting n_draws."""


class UnstableParameters(SvarError):
    """Simulation requested from an explosive VAR."""


class ConfigError(SvarError):
    """A run configuration is invalid; message carries file context."""
