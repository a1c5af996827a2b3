"""Exception hierarchy shared by all solver layers.

CLI exit codes: ConfigError -> 2, ConvergenceError subclasses -> 3,
PreconditionError subclasses -> 4.
"""


class NlfracError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(NlfracError):
    """Malformed or incomplete experiment configuration."""

    def __init__(self, key, message):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


class PreconditionError(NlfracError):
    """A documented operation precondition was violated."""


class ConvergenceError(NlfracError):
    """An iterative method failed to reach its tolerance."""


class InvalidOrder(PreconditionError):
    """Fractional order outside the supported range."""


class InvalidExponent(PreconditionError):
    """Weight exponent outside (0, 1)."""


class NonConvergent(ConvergenceError):
    """Neither evaluation regime met the requested tolerance."""


class SingularAtZero(PreconditionError):
    """The convolution kernel is integrable-singular; it cannot be sampled at t=0."""


class TailNotNegligible(PreconditionError):
    """Truncated-integral tail exceeds the requested tolerance."""


class OutOfDomain(PreconditionError):
    """Spatial point outside the open interval (0, l)."""


class ResonanceDetected(PreconditionError):
    """Nonlocal multiplier denominator vanishes on modes carrying data.

    Carries the offending mode indices (1-based).
    """

    def __init__(self, modes, message=None):
        self.modes = tuple(sorted(modes))
        super().__init__(message or f"resonant modes {self.modes} with nonzero data")


class ResonantScalar(PreconditionError):
    """Scalar nonlocal denominator below the resonance tolerance."""


class NotConverged(ConvergenceError):
    """Fixed-point iteration exhausted its budget; carries the progress report."""

    def __init__(self, report, message=None):
        self.report = report
        super().__init__(message or "iteration did not converge")


class ShootingDiverged(ConvergenceError):
    """Shooting correction failed to meet the two-point condition."""


class ObservationTooSmall(PreconditionError):
    """Observation magnitude fell below its declared floor (condition D1)."""


class DatumCrossesZero(PreconditionError):
    """Observation reaches zero; the coefficient recovery is ill-posed."""
