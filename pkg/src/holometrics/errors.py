"""Exception types shared across the package."""


class HolometricsError(Exception):
    """Base class for all package errors."""


class UnsupportedOperationError(HolometricsError):
    """Requested operation is not defined for this domain variant or input."""


class SamplingFailureError(HolometricsError):
    """Rejection sampling acceptance rate fell below the safety floor."""

    def __init__(self, message, attempts=None, accepted=None):
        super().__init__(message)
        self.attempts = attempts
        self.accepted = accepted


class IllConditionedBasisError(HolometricsError):
    """Gram matrix could not be factorized even after jitter escalation."""


class DegenerateMapError(HolometricsError):
    """Holomorphic map has (numerically) singular Jacobian at a required point."""


class NumericalDegeneracyError(HolometricsError):
    """A quantity that must be positive definite failed its tolerance check."""


class InvalidPathError(HolometricsError):
    """A boundary-approach path left the domain."""


class InfeasibilityError(HolometricsError):
    """No feasible analytic disk was found for an interior point."""


class ConstructionFailureError(HolometricsError):
    """Plurisubharmonic construction ran out of retry budget."""


class ChartFailureError(HolometricsError):
    """Chart embedding failed (inner squeezing radius too small)."""


class InvalidGridError(HolometricsError):
    """Experiment grid violates its preconditions."""


class EmptySampleError(HolometricsError):
    """A sweep produced no admissible samples."""


class PathInitializationError(HolometricsError):
    """Straight-segment path initialization left the domain and no detour was found."""


class ConfigError(HolometricsError):
    """Run configuration failed schema validation."""
