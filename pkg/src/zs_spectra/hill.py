"""Fourier-truncation engine for the Bloch eigenproblem.

Substituting v = e^{i nu x} w with w L-periodic turns the scattering problem
into an eigenproblem on periodic functions; expanding w in the Fourier basis
exp(i*2*pi*j*x/L) gives a dense block matrix

    [ -eps(K + nu)      -i T(q)    ]
    [ -i T(conj q)      eps(K + nu)]

whose truncated eigenvalues approximate the Floquet spectrum at exponent nu.
T(f) is the Toeplitz convolution matrix of the Fourier coefficients of f;
the lower-left block carries the coefficients of conj(q) so that the focusing
structure survives for complex potentials (for real q both blocks coincide).

Spurious truncation modes are filtered against the independent period-map
engine: a point is retained only if |Delta(z) - cos(nu L)| stays below the
residual tolerance.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.linalg import toeplitz

from .errors import DomainError, EigensolverFailure
from .monodromy import DET_DEFECT_TOL, discriminant_batch
from .potential import PeriodicPotential
from .util import Rectangle


def default_n_modes(p: PeriodicPotential, eps: float) -> int:
    """N = max(32, ceil(8 ||q||_inf L / (2 pi eps))): resolves the eps-scale
    oscillation and the |Im z| <= ||q||_inf band."""
    sup = p.norms(eps).sup_norm
    return max(32, math.ceil(8.0 * sup * p.period / (2.0 * math.pi * eps)))


def default_window(p: PeriodicPotential, eps: float) -> Rectangle:
    sup = p.norms(eps).sup_norm
    half = max(5.0, 2.0 * sup)
    return Rectangle(-half, half, -(sup + 0.5), sup + 0.5)


def default_nu_grid(L: float, n: int = 64) -> np.ndarray:
    """n uniform Floquet exponents covering the Brillouin zone [-pi/L, pi/L)."""
    return -math.pi / L + (2.0 * math.pi / L) * np.arange(n) / n


@dataclass(frozen=True)
class HillConfig:
    """Settings for the Fourier engine.

    n_modes=None picks the resolution heuristic; nu_grid=None the 64-point
    Brillouin grid.  residual_tol governs the period-map filter; window
    restricts which eigenvalues are residual-checked and retained.
    """

    eps: float = 1.0
    n_modes: Optional[int] = None
    nu_grid: Optional[np.ndarray] = field(default=None, compare=False)
    residual_tol: float = 1e-6
    window: Optional[Rectangle] = None
    monodromy_tol: float = 1e-8
    threads: int = 1

    def resolved(self, p: PeriodicPotential) -> "HillConfig":
        n = self.n_modes if self.n_modes is not None else default_n_modes(p, self.eps)
        if n < 8:
            raise DomainError("n_modes must be >= 8")
        grid = self.nu_grid if self.nu_grid is not None else default_nu_grid(p.period)
        grid = np.asarray(grid, dtype=float)
        if grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise DomainError("nu_grid must be nonempty and sorted")
        win = self.window if self.window is not None else default_window(p, self.eps)
        return replace(self, n_modes=n, nu_grid=grid, window=win)


@dataclass(frozen=True)
class CloudPoint:
    z: complex
    nu: float
    residual: float
    engine: str = "hill"


@dataclass
class SpectrumCloud:
    """Filtered eigenvalue cloud; every retained point carries its Floquet
    exponent and its period-map residual."""

    points: list[CloudPoint]
    eps: float
    potential_label: str = ""

    def zs(self) -> np.ndarray:
        return np.array([pt.z for pt in self.points], dtype=complex)

    def __len__(self) -> int:
        return len(self.points)


def assemble_hill_matrix(p: PeriodicPotential, nu: float,
                         cfg: HillConfig) -> np.ndarray:
    """Dense 2(2N+1) x 2(2N+1) truncation at Floquet exponent nu."""
    cfg = cfg.resolved(p)
    n = cfg.n_modes
    coeff = p.fourier_coefficients(cfg.eps, 2 * n)
    # T[j, l] = c_{j-l}; offsets up to +-2N are available
    mid = 2 * n
    t_q = toeplitz(coeff[mid:], coeff[mid::-1])
    conj_coeff = np.conj(coeff[::-1])   # coefficients of conj(q)
    t_qc = toeplitz(conj_coeff[mid:], conj_coeff[mid::-1])
    k = 2.0 * math.pi / p.period * np.arange(-n, n + 1)
    d = cfg.eps * (k + nu)
    dim = 2 * n + 1
    out = np.zeros((2 * dim, 2 * dim), dtype=complex)
    out[:dim, :dim] = np.diag(-d)
    out[dim:, dim:] = np.diag(d)
    out[:dim, dim:] = -1j * t_q
    out[dim:, :dim] = -1j * t_qc
    return out


def hill_eigenvalues(p: PeriodicPotential, nu: float,
                     cfg: HillConfig) -> np.ndarray:
    """Unfiltered eigenvalues of the truncated operator at exponent nu."""
    mat = assemble_hill_matrix(p, nu, cfg)
    try:
        return np.linalg.eigvals(mat)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK hiccup
        raise EigensolverFailure(nu, f"eigvals failed at nu={nu}: {exc}")


def _thread_count(cfg: HillConfig) -> int:
    env = os.environ.get("ZS_SPECTRA_THREADS")
    if env:
        return max(1, int(env))
    return max(1, cfg.threads)


def lax_spectrum_hill(p: PeriodicPotential, cfg: HillConfig) -> SpectrumCloud:
    """Union of the filtered Floquet spectra over the nu grid.

    Eigenvalues outside the window are discarded immediately; survivors are
    checked against the period-map residual |Delta(z) - cos(nu L)| and points
    whose unimodularity defect exceeds the acceptance level are dropped as
    unreliable.  The result is deduplicated within 1e-8*(1+|z|) and sorted by
    (nu, Re z, Im z), so output order is independent of thread count.
    """
    cfg = cfg.resolved(p)
    nus = list(cfg.nu_grid)
    workers = _thread_count(cfg)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            eigs = list(pool.map(lambda nu: hill_eigenvalues(p, nu, cfg), nus))
    else:
        eigs = [hill_eigenvalues(p, nu, cfg) for nu in nus]

    win = cfg.window
    cand_z: list[np.ndarray] = []
    cand_nu: list[np.ndarray] = []
    for nu, ev in zip(nus, eigs):
        keep = ((ev.real >= win.re_min) & (ev.real <= win.re_max)
                & (ev.imag >= win.im_min) & (ev.imag <= win.im_max))
        cand_z.append(ev[keep])
        cand_nu.append(np.full(int(keep.sum()), nu))
    if not cand_z or sum(len(c) for c in cand_z) == 0:
        return SpectrumCloud([], cfg.eps, p.label)
    zs = np.concatenate(cand_z)
    nu_of = np.concatenate(cand_nu)

    delta, _, defect = discriminant_batch(p, zs, cfg.eps, cfg.monodromy_tol)
    residual = np.abs(delta - np.cos(nu_of * p.period))
    defect_cap = max(DET_DEFECT_TOL, 20.0 * cfg.monodromy_tol)
    ok = (residual <= cfg.residual_tol) & (defect <= defect_cap)

    pts = sorted(
        (CloudPoint(complex(z), float(nu), float(r)) for z, nu, r
         in zip(zs[ok], nu_of[ok], residual[ok])),
        key=lambda pt: (pt.residual, pt.nu, pt.z.real, pt.z.imag))

    # dedupe within 1e-8*(1+|z|), preferring the smallest residual
    kept: list[CloudPoint] = []
    for pt in pts:
        r = 1e-8 * (1.0 + abs(pt.z))
        if not any(abs(pt.z - other.z) <= r for other in kept):
            kept.append(pt)
    kept.sort(key=lambda pt: (pt.nu, pt.z.real, pt.z.imag))
    return SpectrumCloud(kept, cfg.eps, p.label)
