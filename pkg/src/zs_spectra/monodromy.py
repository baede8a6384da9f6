"""Monodromy matrix and Floquet discriminant of the Zakharov-Shabat problem.

Propagates the principal fundamental solution of

    eps * Phi' = (-i z sigma3 + Q(x)) Phi,    Q = [[0, q], [-conj(q), 0]],

from x=0 to x=L.  The trace of the resulting period map gives the Floquet
discriminant Delta(z) = tr(M)/2; an augmented system for d(Phi)/dz yields
Delta'(z).  Two propagation routes are used:

* piecewise-constant potentials: exact 2x2 matrix exponentials per segment,
* everything else: an adaptive embedded Runge-Kutta 5(4) pair with PI step
  control, batched over many z values with shared steps.

For |Im z| * L / eps beyond the overflow threshold the integration switches
to a commutator-rescaled variable whose entries stay bounded in the closed
upper half plane; the lower half plane is recovered from Schwarz symmetry.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, StepFailure, ToleranceNotMet
from .potential import PeriodicPotential

DEFAULT_TOL = 1e-10
DET_DEFECT_TOL = 1e-9
_OVERFLOW_EXPONENT = 700.0  # switch to rescaled propagation beyond this

SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA2 = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200,
                187 / 2100, 1 / 40])
_E = _B5 - _B4


@dataclass(frozen=True)
class SpectralPoint:
    """Spectral parameter z together with the semiclassical parameter."""

    z: complex
    eps: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.eps <= 1.0:
            raise DomainError(f"eps must lie in (0, 1], got {self.eps}")


@dataclass
class MonodromyResult:
    """Period map M(z; eps) with trace data and the unimodularity defect."""

    m: np.ndarray                 # 2x2 complex
    delta: complex
    delta_prime: Optional[complex]
    det_defect: float

    @property
    def m11(self) -> complex:
        return complex(self.m[0, 0])

    @property
    def m12(self) -> complex:
        return complex(self.m[0, 1])

    @property
    def m21(self) -> complex:
        return complex(self.m[1, 0])

    @property
    def m22(self) -> complex:
        return complex(self.m[1, 1])


@dataclass
class SymmetryReport:
    """Max-abs residuals of the monodromy symmetry identities.

    Entries are None when the potential does not claim the symmetry.
    schwarz applies always; real for real-valued potentials; reflection for
    q(-x) = e^{2i theta} q(x); pt for q(-x) = conj(q(x)).
    """

    schwarz: float
    real: Optional[float] = None
    reflection: Optional[float] = None
    pt: Optional[float] = None

    def worst(self) -> float:
        vals = [v for v in (self.schwarz, self.real, self.reflection, self.pt)
                if v is not None]
        return max(vals)


# -- batched propagation ---------------------------------------------------

def _mm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched 2x2 matrix product, shapes (B,2,2)."""
    out = np.empty_like(a)
    out[:, 0, 0] = a[:, 0, 0] * b[:, 0, 0] + a[:, 0, 1] * b[:, 1, 0]
    out[:, 0, 1] = a[:, 0, 0] * b[:, 0, 1] + a[:, 0, 1] * b[:, 1, 1]
    out[:, 1, 0] = a[:, 1, 0] * b[:, 0, 0] + a[:, 1, 1] * b[:, 1, 0]
    out[:, 1, 1] = a[:, 1, 0] * b[:, 0, 1] + a[:, 1, 1] * b[:, 1, 1]
    return out


def _sinc_like(w: np.ndarray) -> np.ndarray:
    """sin(w)/w, series-safe near w=0 (complex-valued)."""
    out = np.empty_like(w)
    small = np.abs(w) <= 0.1
    ws = w[small]
    u = ws * ws
    out[small] = 1.0 + u * (-1 / 6 + u * (1 / 120 + u * (-1 / 5040 + u / 362880)))
    wl = w[~small]
    out[~small] = np.sin(wl) / wl
    return out


def _phi2_like(w: np.ndarray, t: float, phi0, phi1, xi2) -> np.ndarray:
    """(t*cos(w) - sin(w)/xi)/xi^2, series-safe near w=0."""
    out = np.empty_like(w)
    small = np.abs(w) <= 0.1
    u = w[small] * w[small]
    out[small] = t ** 3 * (-1 / 3 + u * (1 / 30 + u * (-1 / 840 + u * (1 / 45360 - u / 3991680))))
    out[~small] = (t * phi0[~small] - phi1[~small]) / xi2[~small]
    return out


def _segment_expm(value: complex, h: float, zs: np.ndarray, eps: float,
                  derivative: bool):
    """Exact propagator over a constant-q segment, batched over z.

    exp(t*B) with B = [[-iz, c], [-conj(c), iz]] and B^2 = -(z^2+|c|^2) I.
    """
    c = complex(value)
    cc = np.conj(c)
    t = h / eps
    xi2 = zs * zs + abs(c) ** 2
    xi = np.sqrt(xi2)
    w = xi * t
    phi0 = np.cos(w)
    phi1 = t * _sinc_like(w)
    iz = 1j * zs
    e = np.empty((len(zs), 2, 2), dtype=complex)
    e[:, 0, 0] = phi0 - phi1 * iz
    e[:, 0, 1] = phi1 * c
    e[:, 1, 0] = -phi1 * cc
    e[:, 1, 1] = phi0 + phi1 * iz
    if not derivative:
        return e, None
    phi2 = _phi2_like(w, t, phi0, phi1, xi2)
    ez = np.empty_like(e)
    ez[:, 0, 0] = -t * zs * phi1 - zs * phi2 * iz - 1j * phi1
    ez[:, 0, 1] = zs * phi2 * c
    ez[:, 1, 0] = -zs * phi2 * cc
    ez[:, 1, 1] = -t * zs * phi1 + zs * phi2 * iz + 1j * phi1
    return e, ez


def _propagate_exact(segments, zs, eps, derivative):
    n = len(zs)
    m = np.tile(np.eye(2, dtype=complex), (n, 1, 1))
    mz = np.zeros_like(m) if derivative else None
    for x0, x1, value in segments:
        e, ez = _segment_expm(value, x1 - x0, zs, eps, derivative)
        if derivative:
            mz = _mm(e, mz) + _mm(ez, m)
        m = _mm(e, m)
    return m, mz


def _make_rhs(p: PeriodicPotential, zs: np.ndarray, eps: float,
              derivative: bool, rescaled: bool):
    iz = 1j * zs
    qf = p.scalar_evaluator(eps)
    if rescaled:
        two_iz = 2.0 * iz

        def rhs(x, y):
            q = qf(float(x))
            qc = q.conjugate()
            d = np.empty_like(y)
            # V' = [[0, q], [-conj q, 2iz]] V / eps
            d[:, 0] = (q * y[:, 2]) / eps
            d[:, 1] = (q * y[:, 3]) / eps
            d[:, 2] = (-qc * y[:, 0] + two_iz * y[:, 2]) / eps
            d[:, 3] = (-qc * y[:, 1] + two_iz * y[:, 3]) / eps
            if derivative:
                d[:, 4] = (q * y[:, 6]) / eps
                d[:, 5] = (q * y[:, 7]) / eps
                d[:, 6] = (-qc * y[:, 4] + two_iz * y[:, 6] + 2j * y[:, 2]) / eps
                d[:, 7] = (-qc * y[:, 5] + two_iz * y[:, 7] + 2j * y[:, 3]) / eps
            return d

        return rhs

    def rhs(x, y):
        q = qf(float(x))
        qc = q.conjugate()
        d = np.empty_like(y)
        d[:, 0] = (-iz * y[:, 0] + q * y[:, 2]) / eps
        d[:, 1] = (-iz * y[:, 1] + q * y[:, 3]) / eps
        d[:, 2] = (-qc * y[:, 0] + iz * y[:, 2]) / eps
        d[:, 3] = (-qc * y[:, 1] + iz * y[:, 3]) / eps
        if derivative:
            # d/dz of the coefficient matrix is -i*sigma3
            d[:, 4] = (-iz * y[:, 4] + q * y[:, 6] - 1j * y[:, 0]) / eps
            d[:, 5] = (-iz * y[:, 5] + q * y[:, 7] - 1j * y[:, 1]) / eps
            d[:, 6] = (-qc * y[:, 4] + iz * y[:, 6] + 1j * y[:, 2]) / eps
            d[:, 7] = (-qc * y[:, 5] + iz * y[:, 7] + 1j * y[:, 3]) / eps
        return d

    return rhs


def _rk45(rhs, x0: float, x1: float, y: np.ndarray, tol: float, L: float):
    """Adaptive Dormand-Prince step loop over [x0, x1] (shared batch steps)."""
    hmax = L / 16.0
    hmin = 1e-12 * L
    h = min(L / 256.0, x1 - x0)
    x = x0
    k = [None] * 7
    k[0] = rhs(x, y)
    err_prev = 1.0
    while x < x1 - 1e-14 * L:
        h = min(h, x1 - x)
        for i in range(1, 7):
            yi = y + h * sum(_A[i][j] * k[j] for j in range(i))
            k[i] = rhs(x + _C[i] * h, yi)
        ynew = y + h * sum(_B5[i] * k[i] for i in range(7) if _B5[i] != 0.0)
        errv = h * sum(_E[i] * k[i] for i in range(7) if _E[i] != 0.0)
        scale = tol + tol * np.maximum(np.abs(y), np.abs(ynew))
        ratio = np.abs(errv) / scale
        err = float(np.sqrt(np.max(np.mean(ratio * ratio, axis=1))))
        if err <= 1.0:
            x += h
            y = ynew
            k[0] = k[6]  # FSAL
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * err ** -0.14 * err_prev ** 0.08
            err_prev = max(err, 1e-10)
            h = min(hmax, h * min(5.0, max(0.2, fac)))
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < hmin:
                raise StepFailure(x)
    return y


def _rhs_scalar(p, z: complex, eps: float, derivative: bool):
    iz = 1j * z
    qf = p.scalar_evaluator(eps)

    def rhs(x, y):
        q = qf(x)
        qc = q.conjugate()
        out = [
            (-iz * y[0] + q * y[2]) / eps,
            (-iz * y[1] + q * y[3]) / eps,
            (-qc * y[0] + iz * y[2]) / eps,
            (-qc * y[1] + iz * y[3]) / eps,
        ]
        if derivative:
            out += [
                (-iz * y[4] + q * y[6] - 1j * y[0]) / eps,
                (-iz * y[5] + q * y[7] - 1j * y[1]) / eps,
                (-qc * y[4] + iz * y[6] + 1j * y[2]) / eps,
                (-qc * y[5] + iz * y[7] + 1j * y[3]) / eps,
            ]
        return out

    return rhs


def _rk45_scalar(rhs, x0, x1, y, tol, L):
    """Single-z variant of the step loop on plain complex lists, with the
    tableau unrolled (interpreter overhead dominates at batch size one)."""
    hmax = L / 16.0
    hmin = 1e-12 * L
    h = min(L / 256.0, x1 - x0)
    x = x0
    n = len(y)
    rng = range(n)
    k1 = rhs(x, y)
    err_prev = 1.0
    while x < x1 - 1e-14 * L:
        h = min(h, x1 - x)
        k2 = rhs(x + 0.2 * h, [y[j] + h * 0.2 * k1[j] for j in rng])
        k3 = rhs(x + 0.3 * h,
                 [y[j] + h * (0.075 * k1[j] + 0.225 * k2[j]) for j in rng])
        k4 = rhs(x + 0.8 * h,
                 [y[j] + h * (0.9777777777777777 * k1[j]
                              - 3.7333333333333334 * k2[j]
                              + 3.5555555555555554 * k3[j]) for j in rng])
        k5 = rhs(x + 0.8888888888888888 * h,
                 [y[j] + h * (2.9525986892242035 * k1[j]
                              - 11.595793324188385 * k2[j]
                              + 9.822892851699436 * k3[j]
                              - 0.2908093278463649 * k4[j]) for j in rng])
        k6 = rhs(x + h,
                 [y[j] + h * (2.8462752525252526 * k1[j]
                              - 10.757575757575758 * k2[j]
                              + 8.906422717743473 * k3[j]
                              + 0.2784090909090909 * k4[j]
                              - 0.2735313036020583 * k5[j]) for j in rng])
        ynew = [y[j] + h * (0.09114583333333333 * k1[j]
                            + 0.44923629829290207 * k3[j]
                            + 0.6510416666666666 * k4[j]
                            - 0.322376179245283 * k5[j]
                            + 0.13095238095238096 * k6[j]) for j in rng]
        k7 = rhs(x + h, ynew)
        err = 0.0
        for j in rng:
            ev = h * (0.0012326388888888873 * k1[j]
                      - 0.0042527702905061394 * k3[j]
                      + 0.036979166666666674 * k4[j]
                      - 0.05086379716981132 * k5[j]
                      + 0.041904761904761904 * k6[j] - 0.025 * k7[j])
            sc = tol * (1.0 + max(abs(y[j]), abs(ynew[j])))
            err += (abs(ev) / sc) ** 2
        err = math.sqrt(err / n)
        if err <= 1.0:
            x += h
            y = ynew
            k1 = k7  # FSAL
            fac = 5.0 if err == 0.0 else 0.9 * err ** -0.14 * err_prev ** 0.08
            err_prev = max(err, 1e-10)
            h = min(hmax, h * min(5.0, max(0.2, fac)))
        else:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < hmin:
                raise StepFailure(x)
    return y


def _propagate_rk(p, zs, eps, tol, derivative, rescaled=False):
    n = len(zs)
    ncomp = 8 if derivative else 4
    xs = [0.0, *p.smooth_breakpoints(), p.period]
    if n <= 4 and not rescaled:
        # numpy dispatch overhead dwarfs the arithmetic for tiny batches
        m = np.empty((n, 2, 2), dtype=complex)
        mz = np.empty((n, 2, 2), dtype=complex) if derivative else None
        for i in range(n):
            y = [1.0 + 0j, 0j, 0j, 1.0 + 0j] + [0j] * (ncomp - 4)
            rhs = _rhs_scalar(p, complex(zs[i]), eps, derivative)
            for a, b in zip(xs[:-1], xs[1:]):
                y = _rk45_scalar(rhs, a, b, y, tol, p.period)
            m[i] = np.array(y[:4], dtype=complex).reshape(2, 2)
            if derivative:
                mz[i] = np.array(y[4:], dtype=complex).reshape(2, 2)
        return m, mz
    y = np.zeros((n, ncomp), dtype=complex)
    y[:, 0] = 1.0
    y[:, 3] = 1.0
    rhs = _make_rhs(p, zs, eps, derivative, rescaled)
    for a, b in zip(xs[:-1], xs[1:]):
        y = _rk45(rhs, a, b, y, tol, p.period)
    m = y[:, :4].reshape(n, 2, 2)
    mz = y[:, 4:].reshape(n, 2, 2) if derivative else None
    return m, mz


def _propagate_rescaled(p, zs, eps, tol, derivative):
    """Overflow-safe route: bounded in the closed upper half plane; lower
    half plane via conj(M(conj z)) = sigma2 M(z) sigma2."""
    upper = zs.imag >= 0.0
    m = np.empty((len(zs), 2, 2), dtype=complex)
    mz = np.empty_like(m) if derivative else None
    for sel, flip in ((upper, False), (~upper, True)):
        if not np.any(sel):
            continue
        zg = np.conj(zs[sel]) if flip else zs[sel]
        v, vz = _propagate_rk(p, zg, eps, tol, derivative, rescaled=True)
        # saturate instead of overflowing: far outside the bound strip the
        # magnitude only needs to stay monotone for root finders to retreat
        w = -1j * zg * p.period / eps
        phase = np.exp(np.minimum(w.real, 700.0) + 1j * w.imag)
        mg = phase[:, None, None] * v
        if derivative:
            mgz = phase[:, None, None] * (vz - (1j * p.period / eps) * v)
        if flip:
            mg = _conj_flip(mg)
            if derivative:
                mgz = _conj_flip(mgz)
        m[sel] = mg
        if derivative:
            mz[sel] = mgz
    return m, mz


def _conj_flip(m):
    """sigma2 conj(M) sigma2 applied batchwise."""
    out = np.empty_like(m)
    out[:, 0, 0] = np.conj(m[:, 1, 1])
    out[:, 0, 1] = -np.conj(m[:, 1, 0])
    out[:, 1, 0] = -np.conj(m[:, 0, 1])
    out[:, 1, 1] = np.conj(m[:, 0, 0])
    return out


def _magnitude_bins(zs: np.ndarray, ratio: float = 2.0):
    """Index groups of comparable |z| (each spans at most a factor ratio)."""
    if len(zs) <= 64:
        return [np.arange(len(zs))]
    order = np.argsort(np.abs(zs))
    mags = np.abs(zs[order])
    bins = []
    start = 0
    for i in range(1, len(order)):
        if mags[i] > ratio * max(mags[start], 0.5):
            bins.append(order[start:i])
            start = i
    bins.append(order[start:])
    return bins


def monodromy_batch(p: PeriodicPotential, zs, eps: float, tol: float = DEFAULT_TOL,
                    derivative: bool = False):
    """Period maps M(z;eps) for an array of z; returns (M, Mz, det_defect).

    M has shape (n, 2, 2); Mz is None unless derivative=True.  No tolerance
    check is performed here: callers inspect det_defect as needed.
    """
    if tol < 1e-13:
        raise DomainError("tol must be >= 1e-13")
    zs = np.atleast_1d(np.asarray(zs, dtype=complex))
    grow = np.abs(zs.imag) * p.period / eps
    needs_rescale = grow > _OVERFLOW_EXPONENT
    m = np.empty((len(zs), 2, 2), dtype=complex)
    mz = np.empty_like(m) if derivative else None
    if np.any(~needs_rescale):
        idx = np.nonzero(~needs_rescale)[0]
        segs = p.piecewise_segments(eps)
        if segs is not None:
            mi, mzi = _propagate_exact(segs, zs[idx], eps, derivative)
            m[idx] = mi
            if derivative:
                mz[idx] = mzi
        else:
            # bin by |z|: step size tracks the local oscillation rate, so
            # mixing magnitudes would force the finest step on every point
            for sel in _magnitude_bins(zs[idx]):
                gidx = idx[sel]
                mi, mzi = _propagate_rk(p, zs[gidx], eps, tol, derivative)
                m[gidx] = mi
                if derivative:
                    mz[gidx] = mzi
    if np.any(needs_rescale):
        idx = needs_rescale
        mi, mzi = _propagate_rescaled(p, zs[idx], eps, tol, derivative)
        m[idx] = mi
        if derivative:
            mz[idx] = mzi
    prod1 = m[:, 0, 0] * m[:, 1, 1]
    prod2 = m[:, 0, 1] * m[:, 1, 0]
    # normalize: |det - 1| carries cancellation noise ~ ||M||^2 * eps_mach,
    # so an absolute test is meaningless high in the strip
    scale = np.maximum(1.0, np.abs(prod1) + np.abs(prod2))
    defect = np.abs(prod1 - prod2 - 1.0) / scale
    return m, mz, defect


def discriminant_batch(p: PeriodicPotential, zs, eps: float,
                       tol: float = DEFAULT_TOL, derivative: bool = False):
    """Delta(z) (and optionally Delta'(z)) over an array of z.

    Returns (delta, delta_prime_or_None, det_defect).
    """
    m, mz, defect = monodromy_batch(p, zs, eps, tol, derivative)
    delta = 0.5 * (m[:, 0, 0] + m[:, 1, 1])
    dp = 0.5 * (mz[:, 0, 0] + mz[:, 1, 1]) if derivative else None
    return delta, dp, defect


def propagate_monodromy(p: PeriodicPotential, pt: SpectralPoint,
                        tol: float = DEFAULT_TOL,
                        derivative: bool = False) -> MonodromyResult:
    """Single-point period map; raises ToleranceNotMet if det M drifts."""
    m, mz, defect = monodromy_batch(p, [pt.z], pt.eps, tol, derivative)
    d = float(defect[0])
    if d > DET_DEFECT_TOL:
        raise ToleranceNotMet(
            f"det defect {d:.3e} > {DET_DEFECT_TOL} at z={pt.z}")
    delta = complex(0.5 * (m[0, 0, 0] + m[0, 1, 1]))
    dp = complex(0.5 * (mz[0, 0, 0] + mz[0, 1, 1])) if derivative else None
    return MonodromyResult(m[0], delta, dp, d)


def discriminant(p: PeriodicPotential, pt: SpectralPoint,
                 tol: float = DEFAULT_TOL) -> complex:
    """Floquet discriminant Delta(z) = tr M / 2."""
    return propagate_monodromy(p, pt, tol).delta


def discriminant_derivative(p: PeriodicPotential, pt: SpectralPoint,
                            tol: float = DEFAULT_TOL) -> complex:
    """d(Delta)/dz from the jointly integrated augmented system."""
    return propagate_monodromy(p, pt, tol, derivative=True).delta_prime


def _unimodular_inverse(m: np.ndarray) -> np.ndarray:
    return np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex)


def check_symmetries(p: PeriodicPotential, pt: SpectralPoint,
                     tol: float = DEFAULT_TOL) -> SymmetryReport:
    """Residuals of the monodromy symmetry identities at one point.

    Each residual is the max-abs entry defect of the corresponding matrix
    identity, evaluated with independently propagated matrices.
    """
    z, eps = pt.z, pt.eps
    m = monodromy_batch(p, [z], eps, tol)[0][0]
    m_conj_pt = monodromy_batch(p, [np.conj(z)], eps, tol)[0][0]

    schwarz = float(np.max(np.abs(
        np.conj(m_conj_pt) - SIGMA2 @ m @ SIGMA2)))

    real = reflection = pt_res = None
    if p.is_real or p.reflection_theta is not None:
        m_neg_conj = monodromy_batch(p, [-np.conj(z)], eps, tol)[0][0]
    if p.is_real:
        real = float(np.max(np.abs(np.conj(m_neg_conj) - m)))
    if p.reflection_theta is not None:
        th = p.reflection_theta
        s = math.cos(th) * SIGMA1 + math.sin(th) * SIGMA2
        lhs = np.conj(_unimodular_inverse(m_neg_conj))
        reflection = float(np.max(np.abs(lhs - s @ m @ s)))
    if p.is_pt_symmetric:
        lhs = np.conj(_unimodular_inverse(m_conj_pt))
        pt_res = float(np.max(np.abs(lhs - SIGMA3 @ m @ SIGMA3)))
    return SymmetryReport(schwarz, real, reflection, pt_res)
