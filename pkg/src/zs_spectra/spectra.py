"""Root finding and spectral geometry in the complex plane.

Everything here runs on top of the period-map engine: Floquet, periodic,
antiperiodic and Dirichlet eigenvalues come from an argument-principle
pipeline (adaptive Gauss-Kronrod boundary quadrature of f'/f, quadtree
subdivision until each cell isolates one zero cluster, Newton polish with
the analytic derivative); the level set Im Delta = 0 is traced by a
predictor-corrector walker seeded at real-axis saddle points (and, for
potentials with a reflection symmetry, along the imaginary axis), then cut
into spectral bands and gaps by |Re Delta| = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (BoundaryTooClose, ClosedCurveDetected, CountMismatch,
                     DomainError, SeedExhausted)
from .monodromy import discriminant_batch, monodromy_batch
from .potential import PeriodicPotential
from .util import Rectangle

# 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
_XK = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813])
_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529])
_WG = np.array([
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870])
_GAUSS_IDX = np.arange(1, 15, 2)

_WINDING_RTOL = 1e-8
_INTEGER_SLACK = 0.2
_NEWTON_RESIDUAL = 1e-10


class AnalyticTarget:
    """Batched evaluation of an entire function f and its derivative f'.

    An optional coarse variant serves the boundary quadrature, which only
    needs f'/f to a relative 1e-8; Newton polish and residual checks use
    the full-accuracy evaluation.
    """

    def __init__(self, fn: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
                 name: str = "", coarse: Optional[Callable] = None):
        self._fn = fn
        self._coarse = coarse or fn
        self.name = name

    def __call__(self, zs) -> tuple[np.ndarray, np.ndarray]:
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        return self._fn(zs)

    def coarse(self, zs) -> tuple[np.ndarray, np.ndarray]:
        zs = np.atleast_1d(np.asarray(zs, dtype=complex))
        return self._coarse(zs)

    def at(self, z: complex) -> tuple[complex, complex]:
        f, fp = self(np.array([z]))
        return complex(f[0]), complex(fp[0])


def discriminant_target(p: PeriodicPotential, eps: float, shift: complex = 0.0,
                        tol: float = 1e-12) -> AnalyticTarget:
    """f(z) = Delta(z) - shift with f' = Delta'."""

    def fn(zs):
        d, dp, _ = discriminant_batch(p, zs, eps, tol, derivative=True)
        return d - shift, dp

    coarse_tol = max(tol, 1e-8)

    def fn_coarse(zs):
        d, dp, _ = discriminant_batch(p, zs, eps, coarse_tol, derivative=True)
        return d - shift, dp

    return AnalyticTarget(fn, f"delta-{shift}", coarse=fn_coarse)


def discriminant_prime_target(p: PeriodicPotential, eps: float,
                              tol: float = 1e-12) -> AnalyticTarget:
    """f(z) = Delta'(z); f' by central differences of Delta'."""

    def fn(zs):
        h = 1e-6 * (1.0 + np.abs(zs))
        stacked = np.concatenate([zs, zs + h, zs - h])
        _, dp, _ = discriminant_batch(p, stacked, eps, tol, derivative=True)
        n = len(zs)
        return dp[:n], (dp[n:2 * n] - dp[2 * n:]) / (2.0 * h)

    return AnalyticTarget(fn, "delta-prime")


def dirichlet_target(p: PeriodicPotential, eps: float, variant: str = "sum",
                     tol: float = 1e-12) -> AnalyticTarget:
    """Entry (2,1) of the rotated period map whose zeros are the Dirichlet
    eigenvalues; 'sum' uses the v1+v2=0 boundary condition, 'difference'
    the v1=v2 one."""
    if variant not in ("sum", "difference"):
        raise DomainError(f"unknown Dirichlet variant {variant!r}")

    def combo(m):
        if variant == "sum":
            return 0.5j * (m[:, 0, 0] - m[:, 0, 1] + m[:, 1, 0] - m[:, 1, 1])
        return -0.5j * (m[:, 0, 0] - m[:, 1, 0] + m[:, 0, 1] - m[:, 1, 1])

    def fn(zs):
        m, mz, _ = monodromy_batch(p, zs, eps, tol, derivative=True)
        return combo(m), combo(mz)

    coarse_tol = max(tol, 1e-8)

    def fn_coarse(zs):
        m, mz, _ = monodromy_batch(p, zs, eps, coarse_tol, derivative=True)
        return combo(m), combo(mz)

    return AnalyticTarget(fn, f"dirichlet-{variant}", coarse=fn_coarse)


# -- winding numbers --------------------------------------------------------

def _edge_key(a: complex, b: complex):
    return (round(a.real, 13), round(a.imag, 13),
            round(b.real, 13), round(b.imag, 13))


def _edge_integral(target: AnalyticTarget, a: complex, b: complex,
                   rtol: float, max_depth: int) -> complex:
    """Adaptive Gauss-Kronrod integral of f'/f along one segment."""
    panels = [(a, b, 0)]
    total = 0.0 + 0.0j
    while panels:
        zs = np.concatenate([p + (q - p) * 0.5 * (_XK + 1.0)
                             for p, q, _ in panels])
        f, fp = target.coarse(zs)
        if np.any(np.abs(f) < 1e-280):
            raise BoundaryTooClose("zero (numerically) on the contour")
        g = fp / f
        nxt = []
        for i, (p, q, depth) in enumerate(panels):
            gi = g[15 * i:15 * (i + 1)]
            half = 0.5 * (q - p)
            k15 = half * np.sum(_WK * gi)
            g7 = half * np.sum(_WG * gi[_GAUSS_IDX])
            # absolute floor: cancellation noise in f near a multiple zero
            # keeps |K15-G7| from ever meeting the relative test, but a
            # 2e-4 panel defect is harmless against the 0.2 integer slack
            if abs(k15 - g7) <= max(rtol * (1.0 + abs(k15)), 2e-4):
                total += k15
            elif depth >= max_depth:
                raise BoundaryTooClose(
                    f"quadrature not converging near {p + half}")
            else:
                mid = p + half
                nxt.append((p, mid, depth + 1))
                nxt.append((mid, q, depth + 1))
        panels = nxt
    return total


def _winding_raw(target: AnalyticTarget, rect: Rectangle,
                 rtol: float = _WINDING_RTOL, max_depth: int = 14,
                 cache: Optional[dict] = None) -> complex:
    """(1/2 pi i) * boundary integral of f'/f.

    Subdivision revisits edges constantly (siblings share the cut line,
    children inherit parent sides), so converged directed-edge integrals
    are memoized when a cache dict is supplied.
    """
    corners = rect.corners()
    total = 0.0 + 0.0j
    for a, b in zip(corners, corners[1:] + corners[:1]):
        if cache is None:
            total += _edge_integral(target, a, b, rtol, max_depth)
            continue
        key = _edge_key(a, b)
        rkey = _edge_key(b, a)
        if key in cache:
            total += cache[key]
        elif rkey in cache:
            total -= cache[rkey]
        else:
            val = _edge_integral(target, a, b, rtol, max_depth)
            cache[key] = val
            total += val
    return total / (2.0j * math.pi)


def _winding_int(target: AnalyticTarget, rect: Rectangle,
                 cache: Optional[dict] = None) -> int:
    w = _winding_raw(target, rect, cache=cache)
    n = int(round(w.real))
    if abs(w - n) > _INTEGER_SLACK:
        raise BoundaryTooClose(
            f"winding {w:.3f} too far from an integer on {rect}")
    if n < 0:
        raise CountMismatch(f"negative winding {n}")
    return n


def _newton(target: AnalyticTarget, z0: complex, mult: int = 1,
            max_iter: int = 60) -> Optional[complex]:
    """Multiplicity-aware Newton, driven by step size (the residual of a
    multiple zero underflows long before the position converges)."""
    z = z0
    bail = 20.0 * (1.0 + abs(z0))
    for _ in range(max_iter):
        f, fp = target.at(z)
        if fp == 0 or f != f:
            break
        step = mult * f / fp
        z = z - step
        if abs(z - z0) > bail:
            return None
        if abs(step) <= 1e-14 * (1.0 + abs(z)):
            break
    f, _ = target.at(z)
    return z if abs(f) <= _NEWTON_RESIDUAL else None


def _probe_count(target: AnalyticTarget, z: complex, m: int,
                 r_max: float) -> Optional[int]:
    """Winding count on a small square around z, no larger than r_max (the
    probe must stay inside the claiming cell, otherwise it could attribute
    zeros that belong to a neighbour).  The radius grows with the
    multiplicity, below which |f| ~ |c_m| r^m drowns in roundoff."""
    scale = 1.0 + abs(z)
    for r in (1e-7 * scale, 1e-6 * scale, 1e-5 * scale, 1e-4 * scale,
              1e-3 * scale):
        if r > r_max:
            break
        if m > 1 and r < scale * 10.0 ** (-13.0 / m):
            continue
        probe = Rectangle(z.real - r, z.real + r, z.imag - r, z.imag + r)
        try:
            return _winding_int(target, probe)
        except BoundaryTooClose:
            continue
    return None


def _derived_target(target: AnalyticTarget) -> AnalyticTarget:
    """(f', f'') with the second derivative by central differences."""

    def fn(zs):
        h = 1e-6 * (1.0 + np.abs(zs))
        _, fp = target(np.concatenate([zs, zs + h, zs - h]))
        n = len(zs)
        return fp[:n], (fp[n:2 * n] - fp[2 * n:]) / (2.0 * h)

    return AnalyticTarget(fn, target.name + "'")


def _polish_multiple(target: AnalyticTarget, z: complex, m: int) -> complex:
    """Sharpen an m-fold zero via the derivative, where it has order m-1
    and Newton is far better conditioned (machine precision for m=2)."""
    if m not in (2, 3):
        return z
    refined = _newton(_derived_target(target), z, mult=m - 1, max_iter=30)
    if refined is not None and abs(refined - z) <= 1e-4 * (1.0 + abs(z)):
        return refined
    return z


def _cut_is_clear(target: AnalyticTarget, cell: Rectangle, at: float) -> bool:
    """Reject split lines passing through (or hugging) a zero: roots often
    sit exactly on symmetry axes that midpoint cuts would hit repeatedly."""
    if cell.width >= cell.height:
        x = cell.re_min + at * cell.width
        zs = x + 1j * np.linspace(cell.im_min, cell.im_max, 17)
    else:
        y = cell.im_min + at * cell.height
        zs = np.linspace(cell.re_min, cell.re_max, 17) + 1j * y
    f, _ = target.coarse(zs)
    mags = np.abs(f)
    return float(np.min(mags)) > 1e-5 * float(np.max(mags))


def _find_roots(target: AnalyticTarget, rect: Rectangle,
                min_cell: float = 1e-9) -> list[tuple[complex, int]]:
    """All zeros (with winding multiplicity) of the target inside rect."""
    cache: dict = {}
    total = _winding_int(target, rect, cache)
    roots: list[tuple[complex, int]] = []
    work = [(rect, total)]
    while work:
        cell, n = work.pop()
        if n == 0:
            continue
        z = None
        for start in (cell.center,
                      cell.center + 0.23 * cell.width + 0.31j * cell.height,
                      cell.center - 0.27 * cell.width - 0.19j * cell.height):
            z = _newton(target, start, mult=n)
            if z is not None and cell.contains(z):
                break
            z = None
        if z is not None:
            # accept when all n zeros sit at the candidate: the probe must
            # fit inside the cell so no outside zero can be counted
            fit = min(z.real - cell.re_min, cell.re_max - z.real,
                      z.imag - cell.im_min, cell.im_max - z.imag)
            if fit > 0 and _probe_count(target, z, n, fit) == n:
                roots.append((_polish_multiple(target, z, n) if n > 1 else z,
                              n))
                continue
        if cell.diagonal <= min_cell * (1.0 + abs(cell.center)):
            if z is None:
                raise CountMismatch(
                    f"cannot isolate {n} zero(s) near {cell.center}")
            roots.append((z, n))
            continue
        done = False
        for require_clear in (True, False):
            for at in (0.5, 0.55, 0.45, 0.6, 0.4):
                c1, c2 = cell.split(at)
                # roots concentrate on the axes (Schwarz/quartet symmetry),
                # so never place a cut along either of them
                cut = c1.re_max if cell.width >= cell.height else c1.im_max
                if abs(cut) < 0.02 * max(cell.width, cell.height):
                    continue
                if require_clear and not _cut_is_clear(target, cell, at):
                    continue
                try:
                    n1 = _winding_int(target, c1, cache)
                    n2 = _winding_int(target, c2, cache)
                except BoundaryTooClose:
                    continue
                if n1 + n2 == n:
                    work.append((c1, n1))
                    work.append((c2, n2))
                    done = True
                    break
            if done:
                break
        if not done:
            raise CountMismatch(f"subdivision stalled on {cell}")
    found = sum(m for _, m in roots)
    if found != total:
        raise CountMismatch(f"found {found} zeros, boundary count {total}")
    return sorted(roots, key=lambda rm: (rm[0].real, rm[0].imag))


def _find_roots_retry(target, window: Rectangle):
    """One dilation retry when a zero hugs the boundary, then give up."""
    try:
        return _find_roots(target, window)
    except (BoundaryTooClose, CountMismatch):
        return _find_roots(target, window.dilated(1e-4))


# -- public root finders ----------------------------------------------------

def floquet_roots(p: PeriodicPotential, eps: float, nu: float,
                  window: Rectangle, tol: float = 1e-12) -> list[complex]:
    """All z in the window with Delta(z) = cos(nu L); multiple zeros are
    repeated according to their winding multiplicity."""
    target = discriminant_target(p, eps, math.cos(nu * p.period), tol)
    out: list[complex] = []
    for z, m in _find_roots_retry(target, window):
        out.extend([z] * m)
    return out


def periodic_antiperiodic_eigenvalues(p: PeriodicPotential, eps: float,
                                      window: Rectangle, tol: float = 1e-12
                                      ) -> list[tuple[complex, str]]:
    """Band-edge eigenvalues: zeros of Delta - 1 and Delta + 1, tagged."""
    out: list[tuple[complex, str]] = []
    for shift, kind in ((1.0, "periodic"), (-1.0, "antiperiodic")):
        target = discriminant_target(p, eps, shift, tol)
        for z, m in _find_roots_retry(target, window):
            out.extend([(z, kind)] * m)
    return sorted(out, key=lambda t: (t[0].real, t[0].imag, t[1]))


def dirichlet_spectrum(p: PeriodicPotential, eps: float, window: Rectangle,
                       bc_variant: str = "sum", tol: float = 1e-12
                       ) -> list[complex]:
    """Dirichlet eigenvalues (base point 0) inside the window."""
    target = dirichlet_target(p, eps, bc_variant, tol)
    out: list[complex] = []
    for z, m in _find_roots_retry(target, window):
        out.extend([z] * m)
    return out


@dataclass(frozen=True)
class CountingRectangle:
    """Rectangle with the argument-principle zero count of one target."""

    rect: Rectangle
    target: str
    zero_count: int


def count_zeros_rectangle(p: PeriodicPotential, eps: float, rect: Rectangle,
                          target: str = "delta", tol: float = 1e-12
                          ) -> CountingRectangle:
    """Winding-number zero count for Delta, Delta', or Delta -+ 1."""
    key = target.lower()
    if key == "delta":
        t = discriminant_target(p, eps, 0.0, tol)
    elif key == "delta_prime":
        t = discriminant_prime_target(p, eps, tol)
    elif key == "delta_minus_one":
        t = discriminant_target(p, eps, 1.0, tol)
    elif key == "delta_plus_one":
        t = discriminant_target(p, eps, -1.0, tol)
    else:
        raise DomainError(f"unknown counting target {target!r}")
    return CountingRectangle(rect, key, _winding_int(t, rect))


# -- level-curve tracing ----------------------------------------------------

@dataclass
class Band:
    """Maximal arc of {Im Delta = 0} with |Re Delta| <= 1.

    edges holds the refined Delta = +-1 endpoints and their type; an entry
    is None when the arc was clipped by the analysis region instead of
    ending at a band edge.  gap_adjacent marks a true (non-degenerate) gap
    beyond each end.  The infinitely long real-axis band is represented
    symbolically, with on_real_axis=True and its polyline clipped.
    """

    polyline: np.ndarray
    delta_values: np.ndarray
    edges: tuple[Optional[tuple[complex, str]], Optional[tuple[complex, str]]]
    on_real_axis: bool = False
    on_imag_axis: bool = False
    is_spine: bool = False
    crosses_real_at: Optional[complex] = None
    gap_adjacent: tuple[bool, bool] = (False, False)

    def length(self) -> float:
        return float(np.sum(np.abs(np.diff(self.polyline))))


@dataclass
class TraceResult:
    """Bands and gap arcs found inside a region, plus tracing metadata."""

    bands: list[Band]
    gaps: list[np.ndarray]
    region: Rectangle
    eps: float
    period: float
    seeds: list[complex] = field(default_factory=list)

    def off_axis_bands(self) -> list[Band]:
        return [b for b in self.bands if not b.on_real_axis]


def _unit(angle: float) -> complex:
    return complex(math.cos(angle), math.sin(angle))


class _Tracer:
    def __init__(self, p: PeriodicPotential, eps: float, region: Rectangle,
                 tol: float = 1e-8, trace_tol: float = 1e-9):
        self.p = p
        self.eps = eps
        self.region = region
        self.tol = tol
        self.trace_tol = trace_tol
        self.symmetric = p.is_real or (p.reflection_theta is not None)
        self.target = discriminant_target(p, eps, 0.0, tol)
        # band-edge refinement wants the discriminant at full accuracy
        self.precise = discriminant_target(p, eps, 0.0, min(tol, 1e-12))
        self.L = p.period
        # crossing-curve rays discovered at junctions during tracing
        self.extra_seeds: list[tuple[complex, complex]] = []

    def _h0(self, z: complex) -> float:
        # curvature of the level set scales with the oscillation rate |z|/eps
        h = self.L / (64.0 * (1.0 + abs(z) / self.eps))
        return min(h, 0.02 * self.region.diagonal)

    def eval(self, z: complex) -> tuple[complex, complex]:
        return self.target.at(z)

    def probe_directions(self, z0: complex, radius: float) -> list[complex]:
        """Unit directions along which Im Delta changes sign on a small
        circle around z0: the local rays of the level set (works for saddles
        of any order).  Angular resolution ~4 degrees is plenty, the first
        corrector step locks onto the exact curve."""
        nang = 96
        angles = np.linspace(0.0, 2.0 * math.pi, nang, endpoint=False)
        zs = z0 + radius * np.exp(1j * angles)
        f, _ = self.target(zs)
        s = np.sign(f.imag)
        s[s == 0] = 1.0
        step = 2.0 * math.pi / nang
        return [_unit(angles[i] + 0.5 * step) for i in range(nang)
                if s[i] != s[(i + 1) % nang]]

    def corrector(self, z: complex, max_iter: int = 3
                  ) -> tuple[Optional[complex], complex, complex]:
        """Pull z back onto Im Delta = 0 along the local normal."""
        for _ in range(max_iter):
            d, dp = self.eval(z)
            if abs(d.imag) <= self.trace_tol * max(1.0, abs(d)):
                return z, d, dp
            if dp == 0:
                return None, d, dp
            nrm = 1j * np.conj(dp) / abs(dp)
            slope = (dp * nrm).imag
            if slope == 0:
                return None, d, dp
            z = z - (d.imag / slope) * nrm
        d, dp = self.eval(z)
        if abs(d.imag) <= self.trace_tol * max(1.0, abs(d)):
            return z, d, dp
        return None, d, dp

    def trace(self, z0: complex, direction: complex,
              max_vertices: int = 6000) -> tuple[np.ndarray, np.ndarray, str]:
        """Walk the level curve from z0 along `direction`.

        Junctions (saddles of Delta) are walked through along the most
        parallel outgoing ray; the crossing rays are recorded as extra
        seeds.  Stops on leaving the region, entering a deepening gap, or
        stalling.
        """
        pts = [z0]
        d0, dp_prev = self.eval(z0)
        ds = [d0]
        t = direction / abs(direction)
        z = z0
        h0 = self._h0(z0)
        h = 0.5 * h0
        hmin = 1e-6 * h0
        arclen = 0.0
        saddle_guard = 3.0 * h0  # no junction test this close to the start
        reason = "max_vertices"
        while len(pts) < max_vertices:
            zp = z + h * t
            zc, d, dp = self.corrector(zp)
            if zc is None or abs(zc - z) > 3.0 * h:
                h *= 0.5
                if h < hmin:
                    reason = "stalled"
                    break
                continue
            if len(pts) == 1 and abs(zc - z0) > 0.0:
                # near a junction the corrector can snap onto the crossing
                # curve; abandon starts that veer off the probed ray
                got = (zc - z0) / abs(zc - z0)
                if (got * np.conj(t)).real < 0.8:
                    h *= 0.5
                    if h < hmin:
                        reason = "stalled"
                        break
                    continue
            if not self.region.contains(zc):
                zcl = _clip_to_region(z, zc, self.region)
                dcl, _ = self.eval(zcl)
                pts.append(zcl)
                ds.append(dcl)
                reason = "left_region"
                break
            # junction: Delta' vanishing within about one step
            curv = abs(dp - dp_prev) / max(abs(zc - z), 1e-300)
            if arclen > saddle_guard and abs(dp) < 2.0 * curv * h:
                zs = self.polish_saddle(zc)
                if zs is not None and abs(zs - zc) < 3.0 * h:
                    dsad, _ = self.eval(zs)
                    pts.append(zs)
                    ds.append(dsad)
                    cont = self._continue_through(zs, t)
                    if cont is None:
                        reason = "saddle"
                        break
                    z, t, d, dp = cont
                    pts.append(z)
                    ds.append(d)
                    arclen += abs(z - zs)
                    saddle_guard = arclen + 3.0 * h0
                    dp_prev = dp
                    h = 0.5 * self._h0(z)
                    continue
            # resolve band-edge crossings: halve the step until the first
            # vertex beyond |Re Delta| = 1 lands close to the edge, so the
            # Newton refinement cannot snap to a different edge point
            if (abs(d.real) > 2.0 and abs(ds[-1].real) <= 1.0 + 1e-9
                    and h > 64.0 * hmin):
                h *= 0.5
                continue
            tn = np.conj(dp) / abs(dp) if dp != 0 else t
            if (tn * np.conj(t)).real < 0:
                tn = -tn
            arclen += abs(zc - z)
            pts.append(zc)
            ds.append(d)
            if arclen > 6.0 * h0 and abs(zc - z0) < 0.5 * h:
                raise ClosedCurveDetected(
                    f"level curve closed on itself near {z0}")
            # Delta is monotone along a saddle-free arc, so once deep in a
            # gap and still growing the arc cannot re-enter a band
            if abs(d.real) > 10.0 and abs(d.real) > abs(ds[-2].real):
                reason = "deep_gap"
                z = zc
                break
            z, t, dp_prev = zc, tn, dp
            h = min(4.0 * self._h0(z), h * 1.3)
        return np.array(pts), np.array(ds), reason

    def _continue_through(self, zs: complex, t_in: complex):
        """Probe a junction and step onto the outgoing ray most parallel to
        the incoming tangent; transversal rays become extra seeds."""
        radius = 0.25 * self._h0(zs)
        dirs = self.probe_directions(zs, radius)
        side = _drop_axis_directions(
            [d for d in dirs if abs((d * np.conj(t_in)).real) < 0.5],
            zs, self.symmetric)
        self.extra_seeds.extend((zs, d) for d in side)
        best = None
        for d in dirs:
            score = (d * np.conj(t_in)).real
            if best is None or score > best[0]:
                best = (score, d)
        if best is None or best[0] < 0.5:
            return None
        z1, d1, dp1 = self.corrector(zs + radius * best[1])
        if z1 is None:
            return None
        return z1, best[1], d1, dp1

    def polish_saddle(self, z0: complex) -> Optional[complex]:
        """Newton for Delta'(z) = 0 with a finite-difference Delta''."""
        z = z0
        for _ in range(10):
            h = 1e-6 * (1.0 + abs(z))
            _, fp = self.target(np.array([z, z + h, z - h]))
            fpp = (fp[1] - fp[2]) / (2.0 * h)
            if fpp == 0:
                return None
            step = complex(fp[0] / fpp)
            z = z - step
            if abs(step) <= 1e-9 * (1.0 + abs(z)):
                return z
        return z if abs(step) <= 1e-4 * (1.0 + abs(z)) else None


def _clip_to_region(inside: complex, outside: complex,
                    region: Rectangle) -> complex:
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if region.contains(inside + mid * (outside - inside)):
            lo = mid
        else:
            hi = mid
    return inside + lo * (outside - inside)


def _real_axis_saddles(p, eps, re_min, re_max, tol=1e-10) -> list[float]:
    """Real zeros of Delta' (Delta is real-valued on the real axis).

    All brackets are bisected in lockstep so each generation costs a single
    batched propagation.
    """
    spacing = math.pi * eps / p.period
    n = int(min(20000, max(64, 8 * math.ceil((re_max - re_min) / spacing))))
    xs = np.linspace(re_min, re_max, n)
    _, dp, _ = discriminant_batch(p, xs.astype(complex), eps, tol,
                                  derivative=True)
    vals = dp.real
    lo, hi, flo = [], [], []
    for i in range(n - 1):
        if vals[i] * vals[i + 1] < 0 or vals[i] == 0.0:
            lo.append(float(xs[i]))
            hi.append(float(xs[i + 1]))
            flo.append(vals[i])
    lo = np.array(lo)
    hi = np.array(hi)
    flo = np.array(flo)
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        _, dpm, _ = discriminant_batch(p, mid.astype(complex), eps, tol,
                                       derivative=True)
        fm = dpm.real
        same = (fm > 0) == (flo > 0)
        lo = np.where(same, mid, lo)
        flo = np.where(same, fm, flo)
        hi = np.where(same, hi, mid)
    return [float(v) for v in 0.5 * (lo + hi)]


def trace_gamma_contours(p: PeriodicPotential, eps: float, region: Rectangle,
                         tol: float = 1e-8, trace_tol: float = 1e-9
                         ) -> TraceResult:
    """Trace the level set Im Delta = 0 inside `region` and split it into
    spectral bands and gaps.

    Seeds are the real-axis saddle points (real zeros of Delta'), plus the
    imaginary axis and its saddles for potentials with a reflection
    symmetry (the axis then belongs to the level set).  Each seed is probed
    on a small circle for outgoing rays; opposite rays are stitched into a
    single curve so bands pass smoothly through their seeding saddle.  A
    closed traced curve raises ClosedCurveDetected since the level set of
    an entire function cannot contain one.
    """
    tracer = _Tracer(p, eps, region, tol, trace_tol)
    bands: list[Band] = []
    gaps: list[np.ndarray] = []
    seeds: list[complex] = []
    polylines: list[tuple[np.ndarray, np.ndarray]] = []

    straddles_r = region.im_min < 0.0 < region.im_max
    if straddles_r:
        xs = _real_axis_saddles(p, eps, region.re_min, region.re_max, tol)
        seeds.extend(complex(x, 0.0) for x in xs)

    symmetric = p.is_real or (p.reflection_theta is not None)
    straddles_i = region.re_min < 0.0 < region.re_max
    if symmetric and straddles_i:
        ys = np.linspace(region.im_min, region.im_max, 1201)
        dvals, dpvals, _ = discriminant_batch(p, 1j * ys, eps, tol,
                                              derivative=True)
        axis_bands, axis_saddles = _split_imag_axis(ys, dvals, dpvals, tracer)
        bands.extend(axis_bands)
        seeds.extend(axis_saddles)

    if not seeds:
        raise SeedExhausted(f"no level-set seeds inside {region}")

    work: list[tuple[complex, Optional[complex], complex]] = []
    for s in seeds:
        radius = 0.25 * tracer._h0(s)
        dirs = _drop_axis_directions(
            tracer.probe_directions(s, radius), s, symmetric)
        for d1, d2 in _pair_opposite(dirs):
            work.append((s, d1, d2))
    traced = 0
    while work and traced < 400:
        s, d1, d2 = work.pop(0)
        traced += 1
        fwd_p, fwd_d, _ = tracer.trace(s, d1)
        if d2 is not None:
            bwd_p, bwd_d, _ = tracer.trace(s, d2)
            if len(bwd_p) >= 2 and len(fwd_p) >= 2:
                # omit the shared seed vertex: at a multiple saddle its
                # position is far less accurate than its neighbours
                poly = np.concatenate([bwd_p[::-1][:-1], fwd_p[1:]])
                dels = np.concatenate([bwd_d[::-1][:-1], fwd_d[1:]])
            else:
                poly = np.concatenate([bwd_p[::-1], fwd_p[1:]])
                dels = np.concatenate([bwd_d[::-1], fwd_d[1:]])
        else:
            poly, dels = fwd_p, fwd_d
        if len(poly) >= 3 and not _is_duplicate(poly, polylines):
            polylines.append((poly, dels))
        if tracer.extra_seeds:
            for zs, dd in tracer.extra_seeds:
                work.append((zs, dd, None))
            tracer.extra_seeds.clear()

    for poly, dels in polylines:
        bnds, gps = _split_polyline(poly, dels, tracer)
        bands.extend(b for b in bnds
                     if float(np.max(np.abs(b.polyline.imag))) > 1e-9)
        gaps.extend(gps)

    if straddles_r:
        xs_line = np.linspace(region.re_min, region.re_max, 129) + 0j
        d_line, _, _ = discriminant_batch(p, xs_line, eps, tol)
        bands.append(Band(xs_line, d_line, (None, None), on_real_axis=True))

    return TraceResult(_dedupe_bands(bands), gaps, region, eps, p.period,
                       seeds)


def _drop_axis_directions(dirs, seed, symmetric):
    out = []
    for d in dirs:
        if abs(seed.imag) < 1e-12 and abs(d.imag) < 0.2:
            continue  # the real axis is reported symbolically
        if symmetric and abs(seed.real) < 1e-12 and abs(d.real) < 0.2:
            continue  # the imaginary axis is scanned directly
        out.append(d)
    return out


def _pair_opposite(dirs: list[complex]):
    """Group probe directions into (d, -d) pairs where both rays exist."""
    used = [False] * len(dirs)
    pairs = []
    for i, d in enumerate(dirs):
        if used[i]:
            continue
        used[i] = True
        partner = None
        for j in range(i + 1, len(dirs)):
            if not used[j] and abs(dirs[j] + d) < 0.3:
                partner = dirs[j]
                used[j] = True
                break
        pairs.append((d, partner))
    return pairs


def _is_duplicate(poly: np.ndarray, existing) -> bool:
    if not existing:
        return False
    probe = poly[:: max(1, len(poly) // 12)]
    for other, _ in existing:
        dmin = np.array([np.min(np.abs(other - z)) for z in probe])
        if np.mean(dmin <= 1e-3 * (1.0 + np.abs(probe))) > 0.8:
            return True
    return False


def _split_polyline(poly, dels, tracer: _Tracer, edge_pad=1e-9,
                    degenerate_tol=1e-7):
    """Cut one traced curve into band arcs (|Re Delta| <= 1) and gap arcs.

    A gap whose overshoot beyond |Re Delta| = 1 stays below degenerate_tol
    (or whose arc length is negligible) is a double point: its neighbouring
    bands merge, matching the convention that adjacent bands on a single
    curve joined at a multiple point count as one.
    """
    r = dels.real
    inside = np.abs(r) <= 1.0 + edge_pad
    n = len(poly)
    segs: list[list] = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and inside[j + 1] == inside[i]:
            j += 1
        segs.append(["band" if inside[i] else "gap", i, j])
        i = j + 1
    for k in range(1, len(segs) - 1):
        kind, i0, i1 = segs[k]
        if kind == "gap":
            overshoot = float(np.max(np.abs(r[i0:i1 + 1]))) - 1.0
            arclen = float(np.sum(np.abs(np.diff(poly[i0:i1 + 1]))))
            if overshoot <= degenerate_tol or arclen <= 1e-6:
                segs[k][0] = "degenerate"

    gaps = [poly[i0:i1 + 1] for kind, i0, i1 in segs if kind == "gap"]
    bands: list[Band] = []
    k = 0
    while k < len(segs):
        if segs[k][0] != "band":
            k += 1
            continue
        end = k
        while (end + 2 < len(segs) and segs[end + 1][0] == "degenerate"
               and segs[end + 2][0] == "band"):
            end += 2
        i0, i1 = segs[k][1], segs[end][2]
        left_gap = k > 0
        right_gap = end < len(segs) - 1
        bp, bd = poly[i0:i1 + 1], dels[i0:i1 + 1]
        e0 = (_refine_edge(poly[i0], poly[i0 - 1], dels[i0 - 1], tracer)
              if left_gap else None)
        e1 = (_refine_edge(poly[i1], poly[i1 + 1], dels[i1 + 1], tracer)
              if right_gap else None)
        if e0 is not None:
            bp = np.concatenate([[e0[0]], bp])
            bd = np.concatenate([[e0[2]], bd])
        if e1 is not None:
            bp = np.concatenate([bp, [e1[0]]])
            bd = np.concatenate([bd, [e1[2]]])
        band = Band(bp, bd,
                    (None if e0 is None else (e0[0], e0[1]),
                     None if e1 is None else (e1[0], e1[1])),
                    gap_adjacent=(left_gap, right_gap))
        # a "band" of negligible arc length is a double point where a gap
        # curve touches |Re Delta| = 1, not spectrum of its own
        if band.length() > 1e-6:
            bands.append(band)
        k = end + 1
    return bands, gaps


def _refine_edge(z_in, z_out, d_out, tracer: _Tracer):
    """Newton for Delta(z) = +-1 at a band/gap crossing.

    The edge type comes from the sign of Delta just beyond the crossing
    (the inside vertex may sit anywhere in [-1, 1] and would pick the wrong
    sheet); the iteration starts between the bracketing vertices.
    """
    s = 1.0 if d_out.real >= 0 else -1.0
    z = 0.5 * (z_in + z_out)
    # coarse Newton does the travelling, two full-accuracy steps finish
    for _ in range(10):
        d, dp = tracer.eval(z)
        f = d - s
        if dp == 0:
            break
        step = f / dp
        z = z - step
        if abs(step) <= 1e-9 * (1.0 + abs(z)):
            break
    for _ in range(2):
        d, dp = tracer.precise.at(z)
        f = d - s
        if abs(f) <= 1e-13 or dp == 0:
            break
        z = z - f / dp
    if abs(z - z_in) > 4.0 * abs(z_out - z_in) + 1e-12:
        return None  # escaped to a different edge point
    kind = "periodic" if s > 0 else "antiperiodic"
    return (z, kind, complex(s))


def _split_imag_axis(ys, dvals, dpvals, tracer: _Tracer):
    """Bands along the imaginary axis plus the saddle points on it.

    Valid when Delta is real on iR (real potentials or a generalized
    reflection symmetry): the axis is then part of the level set and its
    bands are the intervals with |Delta| <= 1.
    """
    g = dvals.real
    dg = (1j * dpvals).real  # d/dy of Delta(iy)
    saddles = []
    for i in range(len(ys) - 1):
        if dg[i] * dg[i + 1] < 0 and not (ys[i] <= 0.0 <= ys[i + 1]):
            zs = tracer.polish_saddle(1j * 0.5 * (ys[i] + ys[i + 1]))
            if zs is not None and abs(zs.real) < 1e-8:
                saddles.append(1j * zs.imag)
    bands = []
    inside = np.abs(g) <= 1.0 + 1e-9
    i = 0
    n = len(ys)
    while i < n:
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < n and inside[j + 1]:
            j += 1
        poly = 1j * ys[i:j + 1]
        seg_d = dvals[i:j + 1]
        e0 = (_refine_edge(1j * ys[i], 1j * ys[i - 1], dvals[i - 1], tracer)
              if i > 0 else None)
        e1 = (_refine_edge(1j * ys[j], 1j * ys[j + 1], dvals[j + 1], tracer)
              if j < n - 1 else None)
        if e0 is not None:
            poly = np.concatenate([[e0[0]], poly])
            seg_d = np.concatenate([[e0[2]], seg_d])
        if e1 is not None:
            poly = np.concatenate([poly, [e1[0]]])
            seg_d = np.concatenate([seg_d, [e1[2]]])
        crosses = 0j if ys[i] <= 0.0 <= ys[j] else None
        band = Band(poly, seg_d,
                    (None if e0 is None else (e0[0], e0[1]),
                     None if e1 is None else (e1[0], e1[1])),
                    on_imag_axis=True, crosses_real_at=crosses,
                    gap_adjacent=(e0 is not None, e1 is not None))
        if band.length() > 1e-6:
            bands.append(band)
        i = j + 1
    return bands, saddles


def _dedupe_bands(bands: list[Band]) -> list[Band]:
    kept: list[Band] = []
    for b in sorted(bands, key=lambda b: -len(b.polyline)):
        dup = False
        for other in kept:
            if b.on_real_axis != other.on_real_axis:
                continue
            # tolerance must cover the other polyline's vertex spacing
            spacing = other.length() / max(1, len(other.polyline) - 1)
            probe = b.polyline[:: max(1, len(b.polyline) // 10)]
            dmin = np.array([np.min(np.abs(other.polyline - z))
                             for z in probe])
            tol = np.maximum(1e-5 * (1.0 + np.abs(probe)), 0.75 * spacing)
            if np.mean(dmin <= tol) > 0.8:
                dup = True
                break
        if not dup:
            kept.append(b)
    kept.sort(key=lambda b: (not b.on_real_axis,
                             b.polyline[0].real, b.polyline[0].imag))
    return kept


# -- band classification ----------------------------------------------------

@dataclass
class BandClassification:
    """Spine report for a traced region.

    A spine crosses the real axis transversally (tangent at least
    transversal_deg off the axis) and intersects no other off-real band;
    the verdict is region-relative since only the analyzed window is seen.
    """

    bands: list[Band]
    n_spines: int
    n_non_spine_off_real: int
    spine_crossings: list[complex]
    lattice_distances: list[float]
    finite_band_in_region: Optional[bool] = None


def classify_bands(result: TraceResult, n_rect: Optional[float] = None,
                   sup_norm: Optional[float] = None,
                   transversal_deg: float = 10.0) -> BandClassification:
    """Mark spines among the traced bands and measure how far their
    real-axis crossings sit from the asymptotic lattice n*pi*eps/L."""
    off = result.off_axis_bands()
    crossings = []
    transversal = []
    for b in off:
        z_cross, trans = _real_crossing(b, transversal_deg)
        if z_cross is not None:
            # a genuine spine crosses through the interior of the real-axis
            # band: |Delta| < 1 strictly at the junction (a crossing at a
            # band edge is a degenerate multiple point, not a spine)
            k = int(np.argmin(np.abs(b.polyline - z_cross)))
            if abs(b.delta_values[k].real) >= 1.0 - 1e-7:
                trans = False
        crossings.append(z_cross)
        transversal.append(trans)
        if b.crosses_real_at is None:
            b.crosses_real_at = z_cross

    hits = [False] * len(off)
    for i in range(len(off)):
        for j in range(i + 1, len(off)):
            if _polylines_touch(off[i].polyline, off[j].polyline):
                hits[i] = hits[j] = True

    spine_crossings: list[complex] = []
    lattice: list[float] = []
    n_spines = 0
    spacing = math.pi * result.eps / result.period
    for b, z_cross, trans, hit in zip(off, crossings, transversal, hits):
        b.is_spine = z_cross is not None and trans and not hit
        if b.is_spine:
            n_spines += 1
            spine_crossings.append(z_cross)
            lattice.append(abs(z_cross.real
                               - round(z_cross.real / spacing) * spacing))
    verdict = None
    if n_rect is not None and sup_norm is not None:
        box = Rectangle(-n_rect, n_rect, -sup_norm, sup_norm)
        verdict = all(all(box.contains(z, pad=1e-9) for z in b.polyline)
                      for b in off if not b.is_spine)
    return BandClassification(result.bands, n_spines,
                              sum(1 for b in off if not b.is_spine),
                              spine_crossings, lattice, verdict)


def _real_crossing(band: Band, transversal_deg: float):
    poly = band.polyline
    im = poly.imag
    for k in range(len(poly) - 1):
        if im[k] == 0.0 or im[k] * im[k + 1] < 0:
            if im[k] == 0.0:
                z0 = poly[k]
            else:
                t = im[k] / (im[k] - im[k + 1])
                z0 = poly[k] + t * (poly[k + 1] - poly[k])
            a = poly[max(0, k - 1)]
            c = poly[min(len(poly) - 1, k + 2)]
            tangent = c - a
            ang = math.degrees(math.atan2(abs(tangent.imag),
                                          abs(tangent.real)))
            return complex(z0.real, 0.0), ang >= transversal_deg
    return None, False


def _polylines_touch(a: np.ndarray, b: np.ndarray, tol_scale=1e-6) -> bool:
    # vertex-distance test; traced vertices are dense enough for it
    step = max(1, len(a) // 64)
    for z in a[::step]:
        if np.min(np.abs(b - z)) <= tol_scale * (1.0 + abs(z)) + 1e-9:
            return True
    return False
