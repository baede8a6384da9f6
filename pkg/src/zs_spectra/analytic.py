"""Closed-form discriminants, spectra and Dirichlet data for the solvable
potentials (constant background, plane wave, square wave), plus the reduction
of the real-potential problem to a pair of complex Hill equations.

All formulas are even functions of the auxiliary root xi, so the branch of
the square root never matters; removable singularities at xi = 0 are handled
by series switch-over.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NotRealPotential
from .potential import PeriodicPotential

_XI_SERIES_CUTOFF = 1e-6  # |xi^2| below this: use Taylor forms


def _sinc(w):
    """sin(w)/w with complex-safe series near 0."""
    w = np.asarray(w, dtype=complex)
    out = np.empty_like(w)
    small = np.abs(w) <= 0.1
    u = w[small] ** 2
    out[small] = 1.0 + u * (-1 / 6 + u * (1 / 120 + u * (-1 / 5040 + u / 362880)))
    out[~small] = np.sin(w[~small]) / w[~small]
    return out


def _one_minus_cos_over(w2):
    """(1 - cos(w))/w^2 as a function of u = w^2, series-safe."""
    u = np.asarray(w2, dtype=complex)
    out = np.empty_like(u)
    small = np.abs(u) <= 0.01
    us = u[small]
    out[small] = 0.5 + us * (-1 / 24 + us * (1 / 720 + us * (-1 / 40320 + us / 3628800)))
    w = np.sqrt(u[~small])
    out[~small] = (1.0 - np.cos(w)) / u[~small]
    return out


def constant_discriminant(A: float, L: float, eps: float, z):
    """Delta(z) = cos(xi L / eps) with xi^2 = A^2 + z^2."""
    z = np.asarray(z, dtype=complex)
    xi = np.sqrt(A * A + z * z)
    out = np.cos(xi * L / eps)
    return complex(out[()]) if out.ndim == 0 else out


def plane_wave_discriminant(A: float, V: float, L: float, eps: float, z):
    """Two-term discriminant for q = A e^{iVx}.

    Delta = cos(VL/2) cos(xo L/eps) + ((z + eps V/2)/xo) sin(VL/2) sin(xo L/eps),
    with xo^2 = A^2 + (z + eps V/2)^2; even in xo.
    """
    z = np.asarray(z, dtype=complex)
    shifted = z + 0.5 * eps * V
    xo = np.sqrt(A * A + shifted * shifted)
    w = xo * L / eps
    out = (math.cos(0.5 * V * L) * np.cos(w)
           + shifted * math.sin(0.5 * V * L) * (L / eps) * _sinc(w))
    return complex(out[()]) if out.ndim == 0 else out


def signum_discriminant(A: float, L: float, eps: float, z):
    """Delta(z) = (A^2 + z^2 cos(xi L/eps)) / xi^2 for the square wave.

    The xi = 0 points (z = +-iA) are removable; a Taylor form in xi^2 takes
    over for |xi^2| < 1e-6 where direct evaluation loses precision.
    """
    z = np.asarray(z, dtype=complex)
    xi2 = A * A + z * z
    r = L / eps
    out = np.empty_like(z)
    small = np.abs(xi2) < _XI_SERIES_CUTOFF
    # A^2 + z^2 cos(w) = A^2 (1 - cos w) + xi^2 cos w
    u = xi2[small] * r * r
    cosw = np.cos(np.sqrt(u))
    out[small] = A * A * r * r * _one_minus_cos_over(u) + cosw
    w = np.sqrt(xi2[~small]) * r
    out[~small] = (A * A + z[~small] ** 2 * np.cos(w)) / xi2[~small]
    return complex(out[()]) if out.ndim == 0 else out


def constant_dirichlet_function(A: float, L: float, eps: float, z):
    """The analytic function whose zeros are the base-point-0 Dirichlet
    eigenvalues on a constant background: ((z - iA)/(2 xi)) sin(xi L/eps)."""
    z = np.asarray(z, dtype=complex)
    xi2 = A * A + z * z
    xi = np.sqrt(xi2)
    w = xi * L / eps
    out = 0.5 * (z - 1j * A) * (L / eps) * _sinc(w)
    return complex(out[()]) if out.ndim == 0 else out


def constant_dirichlet(A: float, L: float, eps: float, radius: float,
                       *, kill_tol: float = 1e-10) -> np.ndarray:
    """Dirichlet eigenvalues mu with mu^2 = (n pi eps / L)^2 - A^2, |mu| <= radius.

    Every candidate is verified to annihilate the closed-form Dirichlet
    function; for A > 0 this keeps +iA but rejects -iA (only the former is a
    genuine base-point-0 Dirichlet eigenvalue).
    """
    roots: list[complex] = []
    n = 0
    while True:
        mu2 = (n * math.pi * eps / L) ** 2 - A * A
        mu = cmath.sqrt(mu2)
        if abs(mu) > radius and mu2 > 0:
            break
        for cand in {mu, -mu}:
            if abs(cand) <= radius and abs(
                    constant_dirichlet_function(A, L, eps, cand)) <= kill_tol:
                roots.append(cand)
        n += 1
        if n > 10_000:
            break
    uniq: list[complex] = []
    for r in sorted(roots, key=lambda v: (v.real, v.imag)):
        if not any(abs(r - u) <= 1e-12 * (1 + abs(r)) for u in uniq):
            uniq.append(r)
    return np.array(uniq, dtype=complex)


@dataclass(frozen=True)
class CrossSpectrum:
    """The exact Lax spectrum R union {vertical segment}: the real line plus
    the segment Re z = segment_re, |Im z| <= half_height."""

    segment_re: float
    half_height: float

    def distance(self, z: complex) -> float:
        d_real = abs(z.imag)
        if self.half_height <= 0.0:
            return d_real
        dx = abs(z.real - self.segment_re)
        dy = max(0.0, abs(z.imag) - self.half_height)
        return min(d_real, math.hypot(dx, dy))

    def contains(self, z: complex, tol: float = 1e-9) -> bool:
        return self.distance(z) <= tol


def constant_lax_spectrum(A: float, L: float = 2 * math.pi,
                          eps: float = 1.0) -> CrossSpectrum:
    """Sigma_Lax = R union i[-A, A] for a constant background."""
    return CrossSpectrum(0.0, abs(A))


def plane_wave_lax_spectrum(A: float, V: float, eps: float) -> CrossSpectrum:
    """Sigma_Lax = R union [-eps V/2 - iA, -eps V/2 + iA], valid for the
    minimal period L = 2 pi / |V|."""
    if V == 0.0:
        return constant_lax_spectrum(A)
    return CrossSpectrum(-0.5 * eps * V, abs(A))


def hill_reduction(p: PeriodicPotential, eps: float
                   ) -> tuple[Callable, Callable]:
    """Complex Hill potentials W+- = -q^2 -+ i eps q' for real-valued q.

    The change of variables y+- = v1 +- i v2 maps the scattering problem to
    (-eps^2 d^2/dx^2 + W+-) y = lambda y with eigenvalue lambda = z^2.
    """
    xs = np.linspace(0.0, p.period, 257)
    if p.discontinuities:
        xs = xs + 1e-3 * p.period / len(xs)
    if float(np.max(np.abs(p.eval(xs, eps).imag))) > 1e-12:
        raise NotRealPotential(f"{p.label or p.kind.value} is not real-valued")

    def w_plus(x):
        q = p.eval(x, eps)
        return -q * q - 1j * eps * p.eval_derivative(x, eps)

    def w_minus(x):
        q = p.eval(x, eps)
        return -q * q + 1j * eps * p.eval_derivative(x, eps)

    return w_plus, w_minus
