"""Rigorous localization regions for the spectra, cloud audits against
them, and semiclassical parameter sweeps.

Region inventory (all Schwarz symmetric):

* Strip:         |Im z| <= ||q||_inf                 (Lax and Dirichlet)
* Lambda:        Strip  and  |Re z||Im z| <= (eps/2) ||q'||_inf
* LambdaTilde:   |Im mu| <= 2||q||_inf  and  |Re mu||Im mu| <= eps ||q'||_inf
* SigmaInftyNbhd: dist(z, R u i[-||q||_inf, ||q||_inf]) <= delta
* Pi:            Lambda intersected with the disc D(0, (N-1/2) pi / L)
* Xi:            Strip  intersected with the same disc
* WkbStrip:      |Im z| <= (eps/2) ||q'/q||_inf   (real positive potentials,
                 applied to Re z > 0)

The sweep utility recomputes the filtered cloud per eps and fits
log(observable) = alpha log(eps) + c.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import DomainError, UnboundedParameter
from .hill import HillConfig, SpectrumCloud, lax_spectrum_hill
from .monodromy import discriminant_batch
from .potential import PeriodicPotential
from .spectra import dirichlet_spectrum, periodic_antiperiodic_eigenvalues
from .util import Rectangle

_PAD = 1e-9  # boundary tolerance on all membership tests


class RegionKind(str, Enum):
    STRIP = "strip"
    LAMBDA = "lambda"
    LAMBDA_TILDE = "lambda_tilde"
    SIGMA_INFTY_NBHD = "sigma_infty_nbhd"
    PI = "pi"
    XI = "xi"
    WKB_STRIP = "wkb_strip"


@dataclass(frozen=True)
class BoundRegion:
    """A localization region with its defining parameters."""

    kind: RegionKind
    sup_norm: float = math.nan
    deriv_sup_norm: float = math.nan
    log_deriv_sup_norm: float = math.nan
    eps: float = 1.0
    delta: float = math.nan
    n_disc: int = 0
    period: float = math.nan

    def _require(self, value: float, name: str) -> float:
        if math.isnan(value):
            raise DomainError(f"{self.kind.value} region needs {name}")
        if math.isinf(value):
            raise UnboundedParameter(
                f"{self.kind.value} region needs finite {name}")
        return value

    def membership_margin(self, z: complex) -> float:
        """Positive inside (distance-like margin), negative outside."""
        k = self.kind
        if k is RegionKind.STRIP:
            sup = self._require(self.sup_norm, "sup_norm")
            return sup - abs(z.imag)
        if k is RegionKind.LAMBDA:
            sup = self._require(self.sup_norm, "sup_norm")
            dsup = self._require(self.deriv_sup_norm, "deriv_sup_norm")
            return min(sup - abs(z.imag),
                       0.5 * self.eps * dsup - abs(z.real) * abs(z.imag))
        if k is RegionKind.LAMBDA_TILDE:
            sup = self._require(self.sup_norm, "sup_norm")
            dsup = self._require(self.deriv_sup_norm, "deriv_sup_norm")
            return min(2.0 * sup - abs(z.imag),
                       self.eps * dsup - abs(z.real) * abs(z.imag))
        if k is RegionKind.SIGMA_INFTY_NBHD:
            sup = self._require(self.sup_norm, "sup_norm")
            delta = self._require(self.delta, "delta")
            return delta - sigma_infinity_distance(z, sup)
        if k is RegionKind.PI:
            lam = BoundRegion(RegionKind.LAMBDA, sup_norm=self.sup_norm,
                              deriv_sup_norm=self.deriv_sup_norm, eps=self.eps)
            return min(lam.membership_margin(z), self._disc_margin(z))
        if k is RegionKind.XI:
            strip = BoundRegion(RegionKind.STRIP, sup_norm=self.sup_norm)
            return min(strip.membership_margin(z), self._disc_margin(z))
        if k is RegionKind.WKB_STRIP:
            ldsup = self._require(self.log_deriv_sup_norm,
                                  "log_deriv_sup_norm")
            return 0.5 * self.eps * ldsup - abs(z.imag)
        raise DomainError(f"unknown region kind {k}")

    def _disc_margin(self, z: complex) -> float:
        if self.n_disc < 1 or math.isnan(self.period):
            raise DomainError(
                f"{self.kind.value} region needs n_disc and period")
        return (self.n_disc - 0.5) * math.pi / self.period - abs(z)


def sigma_infinity_distance(z: complex, sup_norm: float) -> float:
    """Distance from z to the limiting cross R u i[-sup, sup]."""
    d_real = abs(z.imag)
    dy = max(0.0, abs(z.imag) - sup_norm)
    return min(d_real, math.hypot(abs(z.real), dy))


def region_membership(r: BoundRegion, z: complex) -> bool:
    """Boundary-padded membership test."""
    return r.membership_margin(z) >= -_PAD


def strip_region(p: PeriodicPotential, eps: float = 1.0) -> BoundRegion:
    return BoundRegion(RegionKind.STRIP, sup_norm=p.norms(eps).sup_norm,
                       eps=eps)


def lambda_region(p: PeriodicPotential, eps: float) -> BoundRegion:
    n = p.norms(eps)
    return BoundRegion(RegionKind.LAMBDA, sup_norm=n.sup_norm,
                       deriv_sup_norm=n.deriv_sup_norm, eps=eps)


def lambda_tilde_region(p: PeriodicPotential, eps: float) -> BoundRegion:
    n = p.norms(eps)
    return BoundRegion(RegionKind.LAMBDA_TILDE, sup_norm=n.sup_norm,
                       deriv_sup_norm=n.deriv_sup_norm, eps=eps)


def sigma_infty_nbhd(p: PeriodicPotential, eps: float,
                     delta: float) -> BoundRegion:
    return BoundRegion(RegionKind.SIGMA_INFTY_NBHD,
                       sup_norm=p.norms(eps).sup_norm, eps=eps, delta=delta)


def pi_region(p: PeriodicPotential, n_disc: int) -> BoundRegion:
    n = p.norms(1.0)
    return BoundRegion(RegionKind.PI, sup_norm=n.sup_norm,
                       deriv_sup_norm=n.deriv_sup_norm, eps=1.0,
                       n_disc=n_disc, period=p.period)


def xi_region(p: PeriodicPotential, n_disc: int) -> BoundRegion:
    return BoundRegion(RegionKind.XI, sup_norm=p.norms(1.0).sup_norm,
                       eps=1.0, n_disc=n_disc, period=p.period)


def wkb_strip_region(p: PeriodicPotential, eps: float) -> BoundRegion:
    return BoundRegion(RegionKind.WKB_STRIP,
                       log_deriv_sup_norm=p.norms(eps).log_deriv_sup_norm,
                       eps=eps)


@dataclass
class RegionAudit:
    kind: str
    n_checked: int
    violations: list[int]          # indices of offending cloud points
    worst_margin: float            # most negative margin seen (0 if clean)
    unbounded_parameter: bool = False

    @property
    def n_violations(self) -> int:
        return len(self.violations)


@dataclass
class BoundReport:
    """Per-region audit results for one spectrum cloud."""

    audits: list[RegionAudit]
    eps: float
    potential_label: str = ""

    def clean(self) -> bool:
        return all(a.n_violations == 0 for a in self.audits
                   if not a.unbounded_parameter)


def audit_cloud(cloud: SpectrumCloud, regions: Sequence[BoundRegion],
                point_filter: Optional[Callable[[complex], bool]] = None
                ) -> BoundReport:
    """Check every cloud point against every region.

    A region whose parameters are unbounded for this potential (e.g. the
    product bound for a discontinuous q) is reported as such, never as a
    violation.  point_filter restricts which points the regions apply to
    (used for the half-plane hypothesis of the positive-potential strip).
    """
    audits = []
    pts = [pt.z for pt in cloud.points]
    for r in regions:
        use = [(i, z) for i, z in enumerate(pts)
               if point_filter is None or point_filter(z)]
        try:
            margins = [(i, r.membership_margin(z)) for i, z in use]
        except UnboundedParameter:
            audits.append(RegionAudit(r.kind.value, 0, [], 0.0,
                                      unbounded_parameter=True))
            continue
        bad = [(i, m) for i, m in margins if m < -_PAD]
        worst = min((m for _, m in bad), default=0.0)
        audits.append(RegionAudit(r.kind.value, len(use),
                                  [i for i, _ in bad], worst))
    return BoundReport(audits, cloud.eps, cloud.potential_label)


@dataclass
class CountReport:
    """Eigenvalue counts inside the cardinality regions at eps = 1."""

    n_disc: int
    periodic: int
    antiperiodic: int
    dirichlet: int
    predicted_periodic: int
    predicted_antiperiodic: int
    predicted_dirichlet: int

    def matches(self) -> bool:
        return (self.periodic == self.predicted_periodic
                and self.antiperiodic == self.predicted_antiperiodic
                and self.dirichlet == self.predicted_dirichlet)


def count_in_regions(p: PeriodicPotential, n_disc: int,
                     tol: float = 1e-12) -> CountReport:
    """Count periodic/antiperiodic eigenvalues in Pi(q) and Dirichlet
    eigenvalues in Xi(q) against the predicted 2N-2 / 2N / 2N-1 (at eps=1;
    counts include multiplicity).  N is caller-supplied: the guaranteed
    value is existential and potential-dependent."""
    eps = 1.0
    radius = (n_disc - 0.5) * math.pi / p.period
    sup = p.norms(eps).sup_norm
    half_h = min(radius, sup) + 0.1
    window = Rectangle(-radius - 0.1, radius + 0.1, -half_h, half_h)
    pi_r = pi_region(p, n_disc)
    xi_r = xi_region(p, n_disc)

    edges = periodic_antiperiodic_eigenvalues(p, eps, window, tol)
    n_per = sum(1 for z, kind in edges
                if kind == "periodic" and region_membership(pi_r, z))
    n_anti = sum(1 for z, kind in edges
                 if kind == "antiperiodic" and region_membership(pi_r, z))
    dir_mu = dirichlet_spectrum(p, eps, window, tol=tol)
    n_dir = sum(1 for mu in dir_mu if region_membership(xi_r, mu))
    return CountReport(n_disc, n_per, n_anti, n_dir,
                       2 * n_disc - 2, 2 * n_disc, 2 * n_disc - 1)


class Observable(str, Enum):
    MAX_IM_OFF_REAL = "max_im_off_real"
    BAND_COUNT_IMAG_AXIS = "band_count_imag_axis"
    HAUSDORFF_TO_SIGMA_INFTY = "hausdorff_to_sigma_infty"


_OFF_AXIS = 1e-3  # points closer to the real axis never count as "off"


def max_im_off_real(cloud: SpectrumCloud, re_min: Optional[float] = None
                    ) -> float:
    """sup |Im z| over points off the real axis (optionally Re z > re_min);
    the real axis itself is always spectrum and would zero the statistic."""
    vals = [abs(pt.z.imag) for pt in cloud.points
            if abs(pt.z.imag) > _OFF_AXIS
            and (re_min is None or pt.z.real > re_min)]
    return max(vals, default=0.0)


def hausdorff_to_sigma_infty(cloud: SpectrumCloud, sup_norm: float) -> float:
    """One-sided Hausdorff distance from the cloud to the limiting cross."""
    return max((sigma_infinity_distance(pt.z, sup_norm)
                for pt in cloud.points), default=0.0)


def imag_axis_band_count(p: PeriodicPotential, eps: float,
                         y_max: Optional[float] = None, n: int = 4001,
                         tol: float = 1e-10) -> int:
    """Number of spectral bands along i[0, y_max] (real/even/odd potentials
    only, where the axis belongs to the level set)."""
    if y_max is None:
        y_max = p.norms(eps).sup_norm + 0.05
    ys = np.linspace(0.0, y_max, n)
    d, _, _ = discriminant_batch(p, 1j * ys, eps, tol)
    inside = np.abs(d.real) <= 1.0 + 1e-9
    return int(np.sum(inside[1:] & ~inside[:-1]) + (1 if inside[0] else 0))


@dataclass
class SweepResult:
    """Observable against eps with a power-law fit."""

    eps_values: list[float]
    observable: list[float]
    fitted_exponent: float
    fit_residual: float
    observable_name: str = ""
    clouds: list[SpectrumCloud] = field(default_factory=list, repr=False)


def epsilon_sweep(p: PeriodicPotential, eps_list: Sequence[float],
                  observable: Union[Observable, Callable],
                  hill: Optional[HillConfig] = None,
                  re_min: Optional[float] = None,
                  keep_clouds: bool = False) -> SweepResult:
    """Filtered cloud and observable per eps, plus the least-squares fit of
    log(observable) against log(eps).

    Only eps values whose observable exceeds 10x the residual tolerance
    enter the fit (below that the statistic is numerical noise).  A custom
    callable observable receives (cloud, potential, eps).
    """
    eps_list = list(eps_list)
    if len(eps_list) < 3 or any(b >= a for a, b in
                                zip(eps_list, eps_list[1:])):
        raise DomainError("eps_list must hold >= 3 strictly decreasing values")
    base = hill if hill is not None else HillConfig()
    values: list[float] = []
    clouds: list[SpectrumCloud] = []
    name = "custom"
    for eps in eps_list:
        cfg = HillConfig(eps=eps, n_modes=base.n_modes, nu_grid=base.nu_grid,
                         residual_tol=base.residual_tol, window=base.window,
                         monodromy_tol=base.monodromy_tol,
                         threads=base.threads)
        cloud = lax_spectrum_hill(p, cfg)
        if callable(observable) and not isinstance(observable, Observable):
            val = float(observable(cloud, p, eps))
            name = getattr(observable, "__name__", "custom")
        elif observable is Observable.MAX_IM_OFF_REAL:
            val = max_im_off_real(cloud, re_min)
            name = observable.value
        elif observable is Observable.BAND_COUNT_IMAG_AXIS:
            val = float(imag_axis_band_count(p, eps))
            name = observable.value
        elif observable is Observable.HAUSDORFF_TO_SIGMA_INFTY:
            val = hausdorff_to_sigma_infty(cloud, p.norms(eps).sup_norm)
            name = observable.value
        else:
            raise DomainError(f"unknown observable {observable!r}")
        values.append(val)
        if keep_clouds:
            clouds.append(cloud)

    floor = 10.0 * base.residual_tol
    xs = [math.log(e) for e, v in zip(eps_list, values) if v > floor]
    ys = [math.log(v) for v in values if v > floor]
    if len(xs) >= 2:
        a = np.vstack([xs, np.ones(len(xs))]).T
        coef, res, _, _ = np.linalg.lstsq(a, np.array(ys), rcond=None)
        alpha = float(coef[0])
        resid = float(res[0]) if len(res) else 0.0
    else:
        alpha, resid = math.nan, math.nan
    return SweepResult([float(e) for e in eps_list], values, alpha, resid,
                       name, clouds)
