"""Periodic potential zoo for the Zakharov-Shabat scattering problem.

A :class:`PeriodicPotential` is an immutable description of an L-periodic
complex function q(x) (optionally depending on the semiclassical parameter
eps through a rapidly varying phase).  It knows how to evaluate itself and
its derivative, compute sup/L2 norms, and produce Fourier coefficients in
the basis exp(i*2*pi*j*x/L).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .elliptic import (elliptic_E, elliptic_K, jacobi_dn,
                       jacobi_dn_derivative, jacobi_dn_scalar, jacobi_sn_cn)
from .errors import DiscontinuityError, DomainError

TWO_PI = 2.0 * math.pi

_SAMPLE_POINTS = 10_000          # dense-sampling resolution for numeric norms
_FD_STEP_FRACTION = 1e-6         # centered-difference step, relative to L
_JUMP_GUARD_FRACTION = 1e-12     # derivative refuses x this close to a jump


class Kind(str, Enum):
    CONSTANT = "constant"
    PLANE_WAVE = "plane_wave"
    SIGNUM = "signum"
    EXP_SIN_SQ = "exp_sin_sq"
    JACOBI_DN = "jacobi_dn"
    RAPID_PHASE = "rapid_phase"
    SAMPLED = "sampled"
    USER_CLOSURE = "user_closure"


@dataclass(frozen=True)
class PotentialNorms:
    """Norms of q over one period; math.inf marks an unbounded entry."""

    sup_norm: float
    deriv_sup_norm: float
    l2_norm_sq: float
    log_deriv_sup_norm: float

    def __post_init__(self):
        if self.sup_norm < 0 or self.l2_norm_sq < 0:
            raise DomainError("norms must be nonnegative")


@dataclass(frozen=True)
class PeriodicPotential:
    """Immutable L-periodic potential.

    ``params`` carries the kind-specific constants: A (amplitude), V (plane
    wave wavenumber), m (elliptic parameter), S (phase scale for the
    rapid-phase family).  Symmetry flags feed the monodromy symmetry checks
    and the curve tracer.
    """

    kind: Kind
    period: float
    amplitude: float = 1.0
    wavenumber: float = 0.0
    elliptic_m: float = 0.0
    phase_scale: float = 1.0
    epsilon_coupled: bool = False
    discontinuities: tuple[float, ...] = ()
    is_real: bool = False
    reflection_theta: Optional[float] = None
    is_pt_symmetric: bool = False
    samples: tuple = field(default=(), compare=False, repr=False)
    func: Optional[Callable] = field(default=None, compare=False, repr=False)
    dfunc: Optional[Callable] = field(default=None, compare=False, repr=False)
    label: str = ""

    def __post_init__(self):
        if self.period <= 0:
            raise DomainError("period must be positive")
        if self.kind is Kind.JACOBI_DN and not 0.0 <= self.elliptic_m < 1.0:
            raise DomainError("jacobi_dn potential needs 0 <= m < 1")
        if list(self.discontinuities) != sorted(self.discontinuities):
            raise DomainError("discontinuity list must be sorted")
        if any(not 0.0 <= d < self.period for d in self.discontinuities):
            raise DomainError("discontinuities must lie in [0, L)")

    # -- evaluation ------------------------------------------------------

    def eval(self, x, eps: float = 1.0):
        """q(x) (or q(x; eps) for the rapid-phase family); exactly L-periodic."""
        scalar = np.isscalar(x)
        xr = np.asarray(np.mod(np.asarray(x, dtype=float), self.period))
        out = self._eval_reduced(xr, eps)
        return complex(out[()]) if scalar else out

    def _eval_reduced(self, xr: np.ndarray, eps: float) -> np.ndarray:
        A, L = self.amplitude, self.period
        if self.kind is Kind.CONSTANT:
            return np.full_like(xr, A, dtype=complex)
        if self.kind is Kind.PLANE_WAVE:
            return A * np.exp(1j * self.wavenumber * xr)
        if self.kind is Kind.SIGNUM:
            # +A on (0, L/2), -A on (L/2, L); jump points take the right limit
            return np.where(xr < 0.5 * L, A, -A).astype(complex)
        if self.kind is Kind.EXP_SIN_SQ:
            return np.exp(-np.sin(xr) ** 2).astype(complex)
        if self.kind is Kind.JACOBI_DN:
            return jacobi_dn(xr, self.elliptic_m).astype(complex)
        if self.kind is Kind.RAPID_PHASE:
            amp, phase = self._rapid_amp_phase(xr)
            return amp * np.exp(1j * phase / eps)
        if self.kind is Kind.SAMPLED:
            return self._eval_sampled(xr)
        if self.kind is Kind.USER_CLOSURE:
            return np.asarray(self.func(xr), dtype=complex)
        raise DomainError(f"unknown kind {self.kind}")

    def _rapid_amp_phase(self, xr):
        if self.elliptic_m > 0.0:
            d = jacobi_dn(xr, self.elliptic_m)
            return self.amplitude * d, self.phase_scale * d
        return (self.amplitude * np.ones_like(xr),
                self.phase_scale * np.cos(2.0 * xr))

    def _eval_sampled(self, xr):
        vals = np.asarray(self.samples, dtype=complex)
        n = len(vals)
        coeffs = np.fft.fft(vals) / n
        j = np.fft.fftfreq(n, d=1.0 / n)  # integer mode numbers
        # trigonometric interpolation; spectral accuracy for smooth data
        phases = np.exp(2j * math.pi * np.outer(xr, j) / self.period)
        return phases @ coeffs

    def eval_derivative(self, x, eps: float = 1.0):
        """dq/dx, analytic for closed-form kinds; refuses jump locations."""
        scalar = np.isscalar(x)
        xr = np.asarray(np.mod(np.asarray(x, dtype=float), self.period))
        if self.discontinuities:
            guard = _JUMP_GUARD_FRACTION * self.period
            for d in self.discontinuities:
                gap = np.abs(xr - d)
                gap = np.minimum(gap, self.period - gap)
                if np.any(gap <= guard):
                    raise DiscontinuityError(
                        f"derivative requested at jump x={d} of {self.kind.value}")
        out = self._deriv_reduced(xr, eps)
        return complex(out[()]) if scalar else out

    def _deriv_reduced(self, xr, eps):
        A = self.amplitude
        if self.kind is Kind.CONSTANT:
            return np.zeros_like(xr, dtype=complex)
        if self.kind is Kind.PLANE_WAVE:
            return 1j * self.wavenumber * A * np.exp(1j * self.wavenumber * xr)
        if self.kind is Kind.SIGNUM:
            return np.zeros_like(xr, dtype=complex)  # a.e. derivative
        if self.kind is Kind.EXP_SIN_SQ:
            return (-np.sin(2.0 * xr) * np.exp(-np.sin(xr) ** 2)).astype(complex)
        if self.kind is Kind.JACOBI_DN:
            return jacobi_dn_derivative(xr, self.elliptic_m).astype(complex)
        if self.kind is Kind.RAPID_PHASE:
            return self._rapid_derivative(xr, eps)
        # Sampled/UserClosure: centered difference unless a closure was given
        if self.kind is Kind.USER_CLOSURE and self.dfunc is not None:
            return np.asarray(self.dfunc(xr), dtype=complex)
        h = _FD_STEP_FRACTION * self.period
        return (self.eval(xr + h, eps) - self.eval(xr - h, eps)) / (2.0 * h)

    def _rapid_derivative(self, xr, eps):
        if self.elliptic_m > 0.0:
            d = jacobi_dn(xr, self.elliptic_m)
            dp = jacobi_dn_derivative(xr, self.elliptic_m)
            amp, damp = self.amplitude * d, self.amplitude * dp
            sp = self.phase_scale * dp
            phase = self.phase_scale * d
        else:
            amp = self.amplitude * np.ones_like(xr)
            damp = np.zeros_like(xr)
            sp = -2.0 * self.phase_scale * np.sin(2.0 * xr)
            phase = self.phase_scale * np.cos(2.0 * xr)
        return (damp + 1j * amp * sp / eps) * np.exp(1j * phase / eps)

    # -- norms -----------------------------------------------------------

    def norms(self, eps: float = 1.0) -> PotentialNorms:
        """Sup/L2/logarithmic norms over one period.

        Closed forms are used where the maxima are known; otherwise dense
        sampling with one Newton refinement per local maximum.  The L2 norm
        uses adaptive quadrature (relative tolerance 1e-10).
        """
        A, L, m = abs(self.amplitude), self.period, self.elliptic_m
        if self.kind is Kind.CONSTANT:
            return PotentialNorms(A, 0.0, A * A * L, 0.0 if A else math.inf)
        if self.kind is Kind.PLANE_WAVE:
            V = abs(self.wavenumber)
            return PotentialNorms(A, A * V, A * A * L, V if A else math.inf)
        if self.kind is Kind.SIGNUM:
            return PotentialNorms(A, math.inf, A * A * L, math.inf)
        if self.kind is Kind.EXP_SIN_SQ:
            # |q'| = |sin 2x| e^{-sin^2 x} peaks at sin^2 x = 1 - 1/sqrt(2)
            s = 1.0 - math.sqrt(0.5)
            dsup = 2.0 * math.sqrt(s * (1.0 - s)) * math.exp(-s)
            return PotentialNorms(1.0, dsup, self._l2_quadrature(eps), 1.0)
        if self.kind is Kind.JACOBI_DN:
            # dn' = -m sn cn, |sn cn| <= 1/2;  |q'/q| peaks at sn^2 = (1-sqrt(1-m))/m
            dsup = 0.5 * m
            if m > 0.0:
                s = (1.0 - math.sqrt(1.0 - m)) / m
                log_sup = m * math.sqrt(s * (1.0 - s)) / math.sqrt(1.0 - m * s)
            else:
                log_sup = 0.0
            return PotentialNorms(1.0, dsup, 2.0 * elliptic_E(m), log_sup)
        if self.kind is Kind.RAPID_PHASE and self.elliptic_m == 0.0:
            scale = abs(self.phase_scale)
            return PotentialNorms(A, 2.0 * A * scale / eps, A * A * L,
                                  2.0 * scale / eps)
        # generic numeric route (rapid-phase dn family, Sampled, UserClosure)
        sup = self._sampled_sup(lambda x: np.abs(self.eval(x, eps)))
        dsup = self._sampled_sup(lambda x: np.abs(self.eval_derivative(x, eps)))
        min_abs = self._sampled_min(lambda x: np.abs(self.eval(x, eps)))
        log_sup = math.inf if min_abs < 1e-12 else self._sampled_sup(
            lambda x: np.abs(self.eval_derivative(x, eps) / self.eval(x, eps)))
        return PotentialNorms(sup, dsup, self._l2_quadrature(eps), log_sup)

    def _sampled_sup(self, f, n: int = _SAMPLE_POINTS) -> float:
        x = np.linspace(0.0, self.period, n, endpoint=False)
        # keep clear of jumps where f may be undefined
        if self.discontinuities:
            x = x + 0.5 * self.period / n
        v = np.asarray(f(x), dtype=float)
        best = float(np.max(v))
        idx = np.nonzero((v >= np.roll(v, 1)) & (v >= np.roll(v, -1)))[0]
        h = self.period / n
        for i in idx:
            xi = x[i]
            # one Newton step on d(f^2)/dx via centered differences
            fp = (f(xi + h) ** 2 - f(xi - h) ** 2) / (2 * h)
            fpp = (f(xi + h) ** 2 - 2 * f(xi) ** 2 + f(xi - h) ** 2) / h ** 2
            if fpp < 0 and np.isfinite(fp):
                xs = xi - fp / fpp
                if abs(xs - xi) < h:
                    best = max(best, float(f(np.array([xs]))[0]))
        return best

    def _sampled_min(self, f, n: int = _SAMPLE_POINTS) -> float:
        x = np.linspace(0.0, self.period, n, endpoint=False)
        return float(np.min(np.asarray(f(x), dtype=float)))

    def _l2_quadrature(self, eps: float) -> float:
        pieces = [0.0, *[d for d in self.discontinuities if d > 0], self.period]
        total = 0.0
        for a, b in zip(pieces[:-1], pieces[1:]):
            val, _ = quad(lambda x: abs(self.eval(x, eps)) ** 2, a, b,
                          epsrel=1e-10, limit=200)
            total += val
        return total

    # -- Fourier ---------------------------------------------------------

    def fourier_coefficients(self, eps: float = 1.0, n_modes: int = 32) -> np.ndarray:
        """Coefficients c_j of q in exp(i*2*pi*j*x/L), j = -n_modes..n_modes.

        Returned as an array of length 2*n_modes+1 with index j + n_modes.
        Smooth kinds go through an FFT over 2^ceil(log2(8 n_modes)) samples;
        the discontinuous square wave uses its exact coefficients.
        """
        if n_modes < 1:
            raise DomainError("n_modes must be >= 1")
        if self.kind is Kind.SIGNUM:
            j = np.arange(-n_modes, n_modes + 1)
            c = np.zeros(2 * n_modes + 1, dtype=complex)
            odd = (j % 2) != 0
            c[odd] = 2.0 * self.amplitude / (1j * math.pi * j[odd])
            return c
        n = 1 << max(3, math.ceil(math.log2(8 * n_modes)))
        x = np.arange(n) * (self.period / n)
        vals = self.eval(x, eps)
        spec = np.fft.fft(vals) / n
        j = np.arange(-n_modes, n_modes + 1)
        return spec[np.mod(j, n)]

    # -- structure hints for the propagator ------------------------------

    def scalar_evaluator(self, eps: float = 1.0) -> Callable[[float], complex]:
        """Fast scalar q(x) closure for the pointwise integrator; avoids
        numpy dispatch overhead, which dominates single-point ODE solves."""
        L = self.period
        A = self.amplitude
        if self.kind is Kind.CONSTANT:
            value = complex(A)
            return lambda x: value
        if self.kind is Kind.PLANE_WAVE:
            V = self.wavenumber
            return lambda x: A * cmath.exp(1j * V * (x % L))
        if self.kind is Kind.SIGNUM:
            half = 0.5 * L
            return lambda x: complex(A if (x % L) < half else -A)
        if self.kind is Kind.EXP_SIN_SQ:
            return lambda x: complex(math.exp(-math.sin(x) ** 2))
        if self.kind is Kind.JACOBI_DN:
            dn = jacobi_dn_scalar(self.elliptic_m)
            return lambda x: complex(dn(x))
        if self.kind is Kind.RAPID_PHASE:
            s = self.phase_scale
            if self.elliptic_m > 0.0:
                dn = jacobi_dn_scalar(self.elliptic_m)

                def rp(x: float) -> complex:
                    d = dn(x)
                    return A * d * cmath.exp(1j * s * d / eps)

                return rp
            return lambda x: A * cmath.exp(
                1j * s * math.cos(2.0 * (x % L)) / eps)
        return lambda x: complex(self.eval(x, eps))

    def piecewise_segments(self, eps: float = 1.0):
        """[(x0, x1, value), ...] covering [0, L] if q is piecewise constant,
        else None.  Enables exact matrix-exponential propagation."""
        if self.kind is Kind.CONSTANT:
            return [(0.0, self.period, complex(self.amplitude))]
        if self.kind is Kind.SIGNUM:
            half = 0.5 * self.period
            return [(0.0, half, complex(self.amplitude)),
                    (half, self.period, complex(-self.amplitude))]
        return None

    def smooth_breakpoints(self) -> list[float]:
        """Interior split points for piecewise-smooth integration."""
        return [d for d in self.discontinuities if 0.0 < d < self.period]


# -- factory functions ----------------------------------------------------

def constant(A: float = 1.0, L: float = TWO_PI) -> PeriodicPotential:
    """q = A (real constant background)."""
    return PeriodicPotential(Kind.CONSTANT, L, amplitude=A, is_real=True,
                             reflection_theta=0.0, is_pt_symmetric=True,
                             label=f"constant(A={A})")


def plane_wave(A: float = 1.0, V: float = 1.0,
               L: Optional[float] = None) -> PeriodicPotential:
    """q = A exp(iVx).  Defaults to the minimal period 2*pi/|V|."""
    if V == 0.0:
        return constant(A, L if L is not None else TWO_PI)
    if L is None:
        L = TWO_PI / abs(V)
    cycles = V * L / TWO_PI
    if abs(cycles - round(cycles)) > 1e-9:
        raise DomainError("plane_wave needs V*L to be a multiple of 2*pi")
    return PeriodicPotential(Kind.PLANE_WAVE, L, amplitude=A, wavenumber=V,
                             is_pt_symmetric=True,
                             label=f"plane_wave(A={A},V={V})")


def signum(A: float = 1.0, L: float = 2.0) -> PeriodicPotential:
    """Square wave: +A on (0, L/2), -A on (L/2, L).  Real and odd."""
    return PeriodicPotential(Kind.SIGNUM, L, amplitude=A,
                             discontinuities=(0.0, 0.5 * L), is_real=True,
                             reflection_theta=0.5 * math.pi,
                             label=f"signum(A={A})")


def exp_sin_sq() -> PeriodicPotential:
    """q = exp(-sin^2 x), L = pi.  Real, even, single-lobe."""
    return PeriodicPotential(Kind.EXP_SIN_SQ, math.pi, is_real=True,
                             reflection_theta=0.0, is_pt_symmetric=True,
                             label="exp_sin_sq")


def jacobi_dn_potential(m: float) -> PeriodicPotential:
    """q = dn(x|m), L = 2K(m).  Real, even, single-lobe."""
    return PeriodicPotential(Kind.JACOBI_DN, 2.0 * elliptic_K(m),
                             elliptic_m=m, is_real=True, reflection_theta=0.0,
                             is_pt_symmetric=True, label=f"dn(m={m})")


def rapid_phase_cos(A: float = 1.0, scale: float = 1.0) -> PeriodicPotential:
    """q(x;eps) = A exp(i*scale*cos(2x)/eps), L = pi.  Even, eps-coupled."""
    return PeriodicPotential(Kind.RAPID_PHASE, math.pi, amplitude=A,
                             phase_scale=scale, epsilon_coupled=True,
                             reflection_theta=0.0,
                             label=f"rapid_phase_cos(A={A},S={scale})")


def rapid_phase_dn(m: float, scale: float = 2.0) -> PeriodicPotential:
    """q(x;eps) = dn(x|m) exp(i*scale*dn(x|m)/eps), L = 2K(m).  Even."""
    return PeriodicPotential(Kind.RAPID_PHASE, 2.0 * elliptic_K(m),
                             elliptic_m=m, phase_scale=scale,
                             epsilon_coupled=True, reflection_theta=0.0,
                             label=f"rapid_phase_dn(m={m},S={scale})")


def sampled(values, L: float, **flags) -> PeriodicPotential:
    """Potential from uniform samples over [0, L); trig interpolation."""
    return PeriodicPotential(Kind.SAMPLED, L, samples=tuple(values),
                             label="sampled", **flags)


def from_function(f: Callable, L: float, derivative: Optional[Callable] = None,
                  **flags) -> PeriodicPotential:
    """Potential from an arbitrary vectorized closure on [0, L)."""
    return PeriodicPotential(Kind.USER_CLOSURE, L, func=f, dfunc=derivative,
                             label="user", **flags)


def zero(L: float = TWO_PI) -> PeriodicPotential:
    """The free problem q = 0."""
    return constant(0.0, L)


def by_name(kind: str, *, A: float = 1.0, V: float = 1.0, m: float = 0.6,
            L: Optional[float] = None, S: float = 1.0) -> PeriodicPotential:
    """Build a built-in potential from CLI-style parameters."""
    k = kind.strip().lower().replace("-", "_")
    if k == "constant":
        return constant(A, L if L is not None else TWO_PI)
    if k == "plane_wave":
        return plane_wave(A, V, L)
    if k == "signum":
        return signum(A, L if L is not None else 2.0)
    if k == "exp_sin_sq":
        return exp_sin_sq()
    if k in ("jacobi_dn", "dn"):
        return jacobi_dn_potential(m)
    if k in ("rapid_phase", "rapid_phase_cos"):
        return rapid_phase_cos(A, S)
    if k == "rapid_phase_dn":
        return rapid_phase_dn(m, S)
    if k == "zero":
        return zero(L if L is not None else TWO_PI)
    raise DomainError(f"unknown potential kind {kind!r}")
