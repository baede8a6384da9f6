"""Exception hierarchy for the zs_spectra package."""


class ZsSpectraError(Exception):
    """Base class for all package-specific errors."""


class DomainError(ZsSpectraError):
    """A parameter lies outside the mathematically valid range."""


class DiscontinuityError(ZsSpectraError):
    """Derivative requested at (or too close to) a jump of the potential."""


class NotRealPotential(ZsSpectraError):
    """Operation requires a real-valued potential."""


class StepFailure(ZsSpectraError):
    """Adaptive integrator underflowed its minimum step size."""

    def __init__(self, x: float, message: str = ""):
        self.x = x
        super().__init__(message or f"integrator step underflow at x={x!r}")


class ToleranceNotMet(ZsSpectraError):
    """Propagation finished but the unimodularity check failed."""


class EigensolverFailure(ZsSpectraError):
    """Dense eigensolver did not converge."""

    def __init__(self, nu: float, message: str = ""):
        self.nu = nu
        super().__init__(message or f"eigensolver failed at nu={nu!r}")


class CountMismatch(ZsSpectraError):
    """Subdivision found fewer/more roots than the boundary count."""


class BoundaryTooClose(ZsSpectraError):
    """A zero sits too close to a counting-rectangle boundary."""


class ClosedCurveDetected(ZsSpectraError):
    """A traced level curve closed on itself, which is impossible for the
    discriminant and therefore signals a tracing bug."""


class SeedExhausted(ZsSpectraError):
    """No usable seed point for curve tracing inside the requested region."""


class UnboundedParameter(ZsSpectraError):
    """A bound region needs a norm that is infinite for this potential."""


class ConfigError(ZsSpectraError):
    """Invalid run configuration; the message names the offending key."""
