"""Exception types raised across the package."""


class PostrateError(Exception):
    """Base class for all errors raised by postrate."""


class NonDominated(PostrateError):
    """The true density vanishes on an observed sample."""


class DimensionMismatch(PostrateError):
    pass


class GridMismatch(PostrateError):
    """Two densities are not defined on the same outcome set."""


class EmptyList(PostrateError):
    pass


class StateSpaceTooLarge(PostrateError):
    pass


class NotPositiveDefinite(PostrateError):
    pass


class OutOfRange(PostrateError):
    pass


class UnsupportedKind(PostrateError):
    pass


class BudgetZero(PostrateError):
    pass


class AmplitudeExceeded(PostrateError):
    pass


class QuadratureFailure(PostrateError):
    pass


class OutOfSupport(PostrateError):
    pass


class AllZeroLikelihood(PostrateError):
    pass


class DegenerateESS(PostrateError):
    """Importance sampling collapsed onto too few draws."""

    def __init__(self, message, ess=None, n=None):
        super().__init__(message)
        self.ess = ess
        self.n = n


class MetricViolatesIneq1(PostrateError):
    """The registered metric exceeds the Hellinger-affinity bound on some pair."""


class BoundsCertificateInvalid(PostrateError):
    pass


class EmptyNeighborhood(PostrateError):
    pass


class ConfigError(PostrateError):
    pass


class RegistryMiss(PostrateError):
    pass


class PreconditionViolated(ConfigError):
    """Constants outside the admissible range of the requested check."""


class CheckFailed(PostrateError):
    """At least one requested check failed."""
