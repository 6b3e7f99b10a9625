"""Exception hierarchy.

Every numerical failure at a single phase point derives from :class:`GeometryError`
so the harness can skip the point and keep counting. Configuration problems derive
from :class:`ConfigurationError` and abort a run.
"""


class CartanError(Exception):
    """Base class of all errors raised by the package."""


class GeometryError(CartanError):
    """A pointwise numerical failure; the affected sample is skipped."""


class DomainError(GeometryError):
    """A function was evaluated outside its validity domain."""


class SingularityError(GeometryError):
    """Division by a jet (or number) whose base value is zero."""


class NotPositiveDefinite(GeometryError):
    """The momentum Hessian of K^2 failed a Cholesky factorization."""


class IllConditioned(GeometryError):
    """A matrix that must be inverted is too badly conditioned to trust residuals."""


class AdaptedBasisDegenerate(GeometryError):
    """|p_n| is too small relative to |p| for the reduced vertical basis."""


class HBlockSingular(GeometryError):
    """The Gram block of the reduced vertical basis cannot be inverted safely."""


class ConfigurationError(CartanError):
    """Invalid run configuration or metric definition; aborts the run."""


class HomogeneityViolation(ConfigurationError):
    """The supplied K^2 is not positively 2-homogeneous in the momenta."""


class UnknownMetric(ConfigurationError):
    """Label not present in the built-in metric table."""


class SamplingExhausted(ConfigurationError):
    """The validity domain rejected too many sample candidates."""


class ExpressionError(ConfigurationError):
    """A user metric expression failed to parse or uses unsupported syntax."""
