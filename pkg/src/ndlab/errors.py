"""Exception types raised across the library."""


class NdlabError(Exception):
    """Base class for all library errors."""


class TailTruncationError(NdlabError):
    """Quadrature tail bound exceeds the requested tolerance."""


class SingularSystemError(NdlabError):
    """Moment-matching linear system is too ill-conditioned to trust."""


class DivergentMomentError(NdlabError):
    """Requested kernel moment does not converge."""


class DomainError(NdlabError):
    """Evaluation point falls outside a tabulated domain."""


class ZeroRateError(NdlabError):
    """Total jump rate is below the usable threshold."""


class NonpositiveProfileError(NdlabError):
    """A profile that must be strictly positive is not."""


class AllocationError(NdlabError):
    """Requested dense operator exceeds the configured size limit."""


class StabilityError(NdlabError):
    """Time step violates the explicit stability bound."""


class NonConvergenceError(NdlabError):
    """Iteration failed to converge within the allowed iterations."""


class ReducibleOperatorError(NdlabError):
    """Generator support graph is not strongly connected."""


class NonpositiveCoefficientError(NdlabError):
    """Diffusivity or rate field vanishes (or is negative) on the grid."""


class EpsilonRangeError(NdlabError):
    """Focusing parameter outside (0, 1]."""


class MomentDivergenceError(NdlabError):
    """Second-moment quadrature for the diffusivity did not converge."""


class InconclusiveOrderError(NdlabError):
    """Convergence-order fit is too noisy to report."""


class FocusScalingError(NdlabError):
    """Focused model failed the rate/length scaling verification."""


class ExpressionError(NdlabError):
    """Malformed scalar-field expression."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)
        self.position = position


class ConfigError(NdlabError):
    """Invalid experiment configuration."""


class NegativityWarning(UserWarning):
    """State developed negative entries beyond the roundoff tolerance."""
