"""Spectra of the focusing Zakharov-Shabat operator with periodic potentials.

Two independent engines (period-map/discriminant and the Fourier truncation
of the Bloch eigenproblem), closed-form oracles for the solvable potentials,
root finding and band tracing in the complex plane, rigorous bound-region
audits, and a deterministic CLI.
"""

from . import analytic, bounds, elliptic, hill, monodromy, potential, spectra
from .errors import (
    BoundaryTooClose,
    ClosedCurveDetected,
    ConfigError,
    CountMismatch,
    DiscontinuityError,
    DomainError,
    EigensolverFailure,
    NotRealPotential,
    SeedExhausted,
    StepFailure,
    ToleranceNotMet,
    UnboundedParameter,
    ZsSpectraError,
)
from .util import Rectangle

__all__ = [
    "analytic", "bounds", "elliptic", "hill", "monodromy", "potential",
    "spectra", "Rectangle",
    "BoundaryTooClose", "ClosedCurveDetected", "ConfigError", "CountMismatch",
    "DiscontinuityError", "DomainError", "EigensolverFailure",
    "NotRealPotential", "SeedExhausted", "StepFailure", "ToleranceNotMet",
    "UnboundedParameter", "ZsSpectraError",
]

__version__ = "0.1.0"
