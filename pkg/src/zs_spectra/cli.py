"""Command-line front end with deterministic JSON/CSV/SVG exports.

Subcommands: spectrum, discriminant, dirichlet, bounds-audit, sweep,
validate, figure.  A run is described by a JSON config (see RunConfig);
individual flags override config keys.  Outputs are byte-identical across
repeated runs and thread counts: nothing uses a random number generator and
all result lists are sorted before serialization.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import analytic, bounds, potential
from .errors import (BoundaryTooClose, ClosedCurveDetected, ConfigError,
                     CountMismatch, DomainError, EigensolverFailure,
                     SeedExhausted, StepFailure, ToleranceNotMet,
                     UnboundedParameter, ZsSpectraError)
from .hill import HillConfig, SpectrumCloud, lax_spectrum_hill
from .monodromy import SpectralPoint, check_symmetries, discriminant_batch
from .spectra import TraceResult, classify_bands, dirichlet_spectrum, \
    trace_gamma_contours
from .util import Rectangle, golden_points

SCHEMA = "zs-spectra/1"
CSV_HEADER = "re_z,im_z,nu,residual,engine"

_EXIT_CODES = (
    (ConfigError, 2),
    ((StepFailure, ToleranceNotMet), 3),
    (EigensolverFailure, 4),
    ((CountMismatch, BoundaryTooClose), 5),
    ((ClosedCurveDetected, SeedExhausted), 6),
    (UnboundedParameter, 7),
)


@dataclass
class RunConfig:
    """Validated run description (flag overrides already applied)."""

    kind: str = "constant"
    A: float = 1.0
    V: float = 1.0
    m: float = 0.6
    L: Optional[float] = None
    S: float = 1.0
    eps: object = 1.0              # float or decreasing list for sweeps
    engine: str = "hill"
    window: Optional[list] = None  # [re_min, re_max, im_min, im_max]
    nu_points: int = 64
    n_modes: Optional[int] = None
    residual_tol: float = 1e-6
    outputs: list = field(default_factory=lambda: ["json"])
    out: str = "zs_run"
    n_disc: int = 2
    delta: float = 0.2
    observable: str = "max_im_off_real"
    bc_variant: str = "sum"
    name: str = ""                 # figure name

    def validate(self) -> "RunConfig":
        if self.engine not in ("hill", "monodromy", "both"):
            raise ConfigError(f"engine: unknown value {self.engine!r}")
        if self.nu_points < 1:
            raise ConfigError("nu_points: must be >= 1")
        if self.residual_tol <= 0:
            raise ConfigError("residual_tol: must be positive")
        if self.window is not None:
            if len(self.window) != 4:
                raise ConfigError("window: expected 4 numbers")
            if not (self.window[0] < self.window[1]
                    and self.window[2] < self.window[3]):
                raise ConfigError("window: empty rectangle")
        eps_vals = self.eps if isinstance(self.eps, (list, tuple)) else [self.eps]
        for e in eps_vals:
            if not 0.0 < float(e) <= 1.0:
                raise ConfigError(f"eps: {e} outside (0, 1]")
        for o in self.outputs:
            if o not in ("json", "csv", "svg"):
                raise ConfigError(f"outputs: unknown format {o!r}")
        return self

    def build_potential(self) -> potential.PeriodicPotential:
        try:
            return potential.by_name(self.kind, A=self.A, V=self.V, m=self.m,
                                     L=self.L, S=self.S)
        except DomainError as exc:
            raise ConfigError(f"kind: {exc}")

    def eps_value(self) -> float:
        return float(self.eps[0]) if isinstance(self.eps, (list, tuple)) \
            else float(self.eps)

    def rectangle(self, p, eps) -> Rectangle:
        if self.window is not None:
            return Rectangle(*[float(v) for v in self.window])
        sup = p.norms(eps).sup_norm
        half = max(2.5, 1.5 * sup)
        return Rectangle(-half, half, -(sup + 0.3), sup + 0.3)

    def hill_config(self, p, eps) -> HillConfig:
        grid = None
        if self.nu_points != 64:
            L = p.period
            grid = -math.pi / L + (2 * math.pi / L) * np.arange(self.nu_points) / self.nu_points
        win = Rectangle(*[float(v) for v in self.window]) if self.window else None
        return HillConfig(eps=eps, n_modes=self.n_modes, nu_grid=grid,
                          residual_tol=self.residual_tol, window=win)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind, "A": self.A, "V": self.V, "m": self.m,
            "L": self.L, "S": self.S, "eps": self.eps, "engine": self.engine,
            "window": self.window, "nu_points": self.nu_points,
            "n_modes": self.n_modes, "residual_tol": self.residual_tol,
        }


# -- serialization ----------------------------------------------------------

def cloud_json(cloud: SpectrumCloud) -> list[dict]:
    return [{"re": pt.z.real, "im": pt.z.imag, "nu": pt.nu,
             "residual": pt.residual} for pt in cloud.points]


def bands_json(result: Optional[TraceResult]) -> list[dict]:
    if result is None:
        return []
    out = []
    for b in result.bands:
        edges = []
        for e in b.edges:
            if e is None:
                edges.append(None)
            else:
                edges.append({"re": e[0].real, "im": e[0].imag, "type": e[1]})
        out.append({
            "polyline": [[z.real, z.imag] for z in b.polyline],
            "edges": edges,
            "is_spine": bool(b.is_spine),
            "on_real_axis": bool(b.on_real_axis),
        })
    return out


def report_json(report: Optional[bounds.BoundReport]) -> dict:
    if report is None:
        return {}
    return {
        "eps": report.eps,
        "clean": report.clean(),
        "regions": [{
            "kind": a.kind,
            "n_checked": a.n_checked,
            "n_violations": a.n_violations,
            "worst_margin": a.worst_margin,
            "unbounded_parameter": a.unbounded_parameter,
        } for a in report.audits],
    }


def write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def write_csv(path: str, cloud: SpectrumCloud) -> None:
    lines = [CSV_HEADER]
    for pt in cloud.points:
        lines.append(f"{pt.z.real!r},{pt.z.imag!r},{pt.nu!r},"
                     f"{pt.residual!r},{pt.engine}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


class SvgCanvas:
    """Minimal deterministic SVG writer (fixed float formatting)."""

    W, H = 720, 540
    MARGIN = 48

    def __init__(self, rect: Rectangle, title: str = ""):
        self.rect = rect
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.W}" '
            f'height="{self.H}" viewBox="0 0 {self.W} {self.H}">',
            f'<rect width="{self.W}" height="{self.H}" fill="white"/>',
        ]
        if title:
            self.parts.append(
                f'<text x="{self.W // 2}" y="24" text-anchor="middle" '
                f'font-size="14" font-family="sans-serif">{title}</text>')
        self._axes()

    def _x(self, re: float) -> float:
        w = self.W - 2 * self.MARGIN
        return self.MARGIN + (re - self.rect.re_min) / self.rect.width * w

    def _y(self, im: float) -> float:
        h = self.H - 2 * self.MARGIN
        return self.H - self.MARGIN - (im - self.rect.im_min) / self.rect.height * h

    def _axes(self):
        if self.rect.im_min < 0 < self.rect.im_max:
            y = self._y(0.0)
            self.parts.append(
                f'<line x1="{self.MARGIN}" y1="{y:.2f}" '
                f'x2="{self.W - self.MARGIN}" y2="{y:.2f}" '
                f'stroke="#bbbbbb" stroke-width="0.8"/>')
        if self.rect.re_min < 0 < self.rect.re_max:
            x = self._x(0.0)
            self.parts.append(
                f'<line x1="{x:.2f}" y1="{self.MARGIN}" x2="{x:.2f}" '
                f'y2="{self.H - self.MARGIN}" stroke="#bbbbbb" '
                f'stroke-width="0.8"/>')

    def polyline(self, zs: Sequence[complex], color: str = "#1f4fa0",
                 width: float = 1.6, dashed: bool = False):
        pts = " ".join(f"{self._x(z.real):.3f},{self._y(z.imag):.3f}"
                       for z in zs)
        dash = ' stroke-dasharray="6,4"' if dashed else ""
        self.parts.append(f'<polyline points="{pts}" fill="none" '
                          f'stroke="{color}" stroke-width="{width}"{dash}/>')

    def markers(self, zs: Sequence[complex], color: str = "#2a6fdb",
                r: float = 1.6):
        for z in zs:
            self.parts.append(
                f'<circle cx="{self._x(z.real):.3f}" '
                f'cy="{self._y(z.imag):.3f}" r="{r}" fill="{color}"/>')

    def save(self, path: str):
        with open(path, "w") as fh:
            fh.write("\n".join(self.parts) + "\n</svg>\n")


def bound_curve_points(sup: float, dsup: float, eps: float,
                       rect: Rectangle, n: int = 400) -> list[complex]:
    """|Im z| = min(sup, eps*dsup/(2|Re z|)) sampled over the window."""
    xs = np.linspace(rect.re_min, rect.re_max, n)
    ys = []
    for x in xs:
        if x == 0.0:
            ys.append(sup)
        else:
            ys.append(min(sup, 0.5 * eps * dsup / abs(x)))
    return [complex(x, y) for x, y in zip(xs, ys)]


def _emit(cfg: RunConfig, payload: dict, cloud: Optional[SpectrumCloud],
          trace: Optional[TraceResult], eps: float, p) -> list[str]:
    written = []
    if "json" in cfg.outputs:
        path = cfg.out + ".json"
        write_json(path, payload)
        written.append(path)
    if "csv" in cfg.outputs and cloud is not None:
        path = cfg.out + ".csv"
        write_csv(path, cloud)
        written.append(path)
    if "svg" in cfg.outputs:
        path = cfg.out + ".svg"
        rect = cfg.rectangle(p, eps)
        canvas = SvgCanvas(rect, title=f"{p.label} eps={eps}")
        norms = p.norms(eps)
        if math.isfinite(norms.deriv_sup_norm):
            curve = bound_curve_points(norms.sup_norm, norms.deriv_sup_norm,
                                       eps, rect)
            canvas.polyline(curve, color="#b03030", dashed=True, width=1.1)
            canvas.polyline([z.conjugate() for z in curve], color="#b03030",
                            dashed=True, width=1.1)
        if trace is not None:
            for b in trace.bands:
                canvas.polyline(b.polyline, color="#d08020", width=2.2)
        if cloud is not None:
            canvas.markers([pt.z for pt in cloud.points])
        canvas.save(path)
        written.append(path)
    return written


# -- subcommands -------------------------------------------------------------

def cmd_spectrum(cfg: RunConfig) -> int:
    p = cfg.build_potential()
    eps = cfg.eps_value()
    cloud = None
    trace = None
    if cfg.engine in ("hill", "both"):
        cloud = lax_spectrum_hill(p, cfg.hill_config(p, eps))
    if cfg.engine in ("monodromy", "both"):
        trace = trace_gamma_contours(p, eps, cfg.rectangle(p, eps))
        classify_bands(trace)
    payload = {
        "schema": SCHEMA,
        "config": cfg.as_dict(),
        "cloud": cloud_json(cloud) if cloud else [],
        "bands": bands_json(trace),
        "bound_report": {},
    }
    for path in _emit(cfg, payload, cloud, trace, eps, p):
        print(path)
    return 0


def cmd_discriminant(cfg: RunConfig) -> int:
    p = cfg.build_potential()
    eps = cfg.eps_value()
    rect = cfg.rectangle(p, eps)
    n = 101
    xs = np.linspace(rect.re_min, rect.re_max, n)
    ys = np.linspace(rect.im_min, rect.im_max, n)
    zs = (xs[None, :] + 1j * ys[:, None]).ravel()
    d, _, _ = discriminant_batch(p, zs, eps)
    payload = {
        "schema": SCHEMA,
        "config": cfg.as_dict(),
        "grid": {"re": list(map(float, xs)), "im": list(map(float, ys))},
        "delta_re": [float(v) for v in d.real],
        "delta_im": [float(v) for v in d.imag],
    }
    path = cfg.out + ".json"
    write_json(path, payload)
    print(path)
    return 0


def cmd_dirichlet(cfg: RunConfig) -> int:
    p = cfg.build_potential()
    eps = cfg.eps_value()
    rect = cfg.rectangle(p, eps)
    mus = dirichlet_spectrum(p, eps, rect, bc_variant=cfg.bc_variant)
    payload = {
        "schema": SCHEMA,
        "config": cfg.as_dict(),
        "dirichlet": [{"re": m.real, "im": m.imag} for m in mus],
    }
    path = cfg.out + ".json"
    write_json(path, payload)
    print(path)
    return 0


def cmd_bounds_audit(cfg: RunConfig) -> int:
    p = cfg.build_potential()
    eps = cfg.eps_value()
    cloud = lax_spectrum_hill(p, cfg.hill_config(p, eps))
    regions = [bounds.strip_region(p, eps), bounds.lambda_region(p, eps),
               bounds.sigma_infty_nbhd(p, eps, cfg.delta)]
    report = bounds.audit_cloud(cloud, regions)
    payload = {
        "schema": SCHEMA,
        "config": cfg.as_dict(),
        "cloud": cloud_json(cloud),
        "bands": [],
        "bound_report": report_json(report),
    }
    for path in _emit(cfg, payload, cloud, None, eps, p):
        print(path)
    return 0 if report.clean() else 1


def cmd_sweep(cfg: RunConfig) -> int:
    p = cfg.build_potential()
    eps_list = cfg.eps if isinstance(cfg.eps, (list, tuple)) else None
    if not eps_list or len(eps_list) < 3:
        raise ConfigError("eps: sweep needs a decreasing list of >= 3 values")
    obs = bounds.Observable(cfg.observable)
    re_min = 1e-3 if obs is bounds.Observable.MAX_IM_OFF_REAL else None
    result = bounds.epsilon_sweep(p, [float(e) for e in eps_list], obs,
                                  hill=cfg.hill_config(p, float(eps_list[0])),
                                  re_min=re_min)
    payload = {
        "schema": SCHEMA,
        "config": cfg.as_dict(),
        "sweep": {
            "eps": result.eps_values,
            "observable": result.observable,
            "observable_name": result.observable_name,
            "fitted_exponent": result.fitted_exponent,
            "fit_residual": result.fit_residual,
        },
    }
    path = cfg.out + ".json"
    write_json(path, payload)
    print(path)
    print(f"fitted exponent: {result.fitted_exponent:.4f}")
    return 0


def cmd_validate(cfg: RunConfig) -> int:
    """Oracle-agreement and symmetry suite; exit 0 when every residual is
    at or below 1e-9."""
    p = cfg.build_potential()
    eps = cfg.eps_value()
    box = Rectangle(-2.0, 2.0, -0.9, 0.9)
    zs = golden_points(24, box)
    worst_sym = 0.0
    for z in zs[:6]:
        rep = check_symmetries(p, SpectralPoint(complex(z), eps), tol=1e-12)
        worst_sym = max(worst_sym, rep.worst())
    print(f"symmetry residual: {worst_sym:.3e}")
    worst_oracle = 0.0
    oracle = None
    if cfg.kind == "constant":
        oracle = analytic.constant_discriminant(cfg.A, p.period, eps, zs)
    elif cfg.kind == "plane_wave":
        oracle = analytic.plane_wave_discriminant(cfg.A, cfg.V, p.period,
                                                  eps, zs)
    elif cfg.kind == "signum":
        oracle = analytic.signum_discriminant(cfg.A, p.period, eps, zs)
    if oracle is not None:
        d, _, defect = discriminant_batch(p, zs, eps, tol=1e-12)
        scale = np.maximum(1.0, np.abs(oracle))
        worst_oracle = float(np.max(np.abs(d - oracle) / scale))
        print(f"oracle residual: {worst_oracle:.3e} "
              f"(det defect {float(np.max(defect)):.3e})")
    ok = worst_sym <= 1e-9 and worst_oracle <= 1e-9
    print("validate:", "ok" if ok else "FAILED")
    return 0 if ok else 1


_FIGURES = {
    "fig4-left": ("plane_wave", {"A": 1.0, "V": 1.0}, 1.0),
    "fig4-right": ("plane_wave", {"A": 1.0, "V": 1.0}, 0.2),
    "fig5-left": ("signum", {"A": 1.0, "L": 2.0}, 0.019),
    "fig6-left": ("exp_sin_sq", {}, 1.0),
    "fig6-right": ("exp_sin_sq", {}, 0.079),
    "fig7-left": ("jacobi_dn", {"m": 0.6}, 0.5),
    "fig7-right": ("jacobi_dn", {"m": 0.6}, 0.1),
    "fig8-left": ("rapid_phase", {"A": 1.0, "S": 1.0}, 0.22),
    "fig8-right": ("rapid_phase", {"A": 1.0, "S": 1.0}, 0.019),
    "fig9-left": ("rapid_phase_dn", {"m": 0.88, "S": 2.0}, 0.2),
    "fig9-right": ("rapid_phase_dn", {"m": 0.88, "S": 2.0}, 0.03),
}


def cmd_figure(cfg: RunConfig) -> int:
    name = cfg.name
    if name == "fig5-right":
        return _figure_signum_fit(cfg)
    if name not in _FIGURES:
        raise ConfigError(f"name: unknown figure {name!r} "
                          f"(choose from {sorted(_FIGURES)} or fig5-right)")
    kind, params, eps = _FIGURES[name]
    p = potential.by_name(kind, **params)
    cloud = lax_spectrum_hill(p, HillConfig(eps=eps))
    sup = p.norms(eps).sup_norm
    rect = Rectangle(-4.0, 4.0, -(sup + 0.3), sup + 0.3)
    canvas = SvgCanvas(rect, title=f"{name}: {p.label} eps={eps}")
    norms = p.norms(eps)
    if math.isfinite(norms.deriv_sup_norm):
        curve = bound_curve_points(norms.sup_norm, norms.deriv_sup_norm,
                                   eps, rect)
        canvas.polyline(curve, color="#b03030", dashed=True, width=1.1)
        canvas.polyline([z.conjugate() for z in curve], color="#b03030",
                        dashed=True, width=1.1)
    canvas.markers([pt.z for pt in cloud.points])
    path = cfg.out + ".svg"
    canvas.save(path)
    print(path)
    return 0


def _figure_signum_fit(cfg: RunConfig) -> int:
    p = potential.signum(1.0, 2.0)
    eps_list = [0.15, 0.1, 0.07, 0.05]
    result = bounds.epsilon_sweep(p, eps_list,
                                  bounds.Observable.MAX_IM_OFF_REAL,
                                  re_min=1e-3)
    rect = Rectangle(math.log(eps_list[-1]) - 0.3, math.log(eps_list[0]) + 0.3,
                     min(math.log(v) for v in result.observable) - 0.3,
                     max(math.log(v) for v in result.observable) + 0.3)
    canvas = SvgCanvas(rect, title="decay of sup |Im z| (log-log)")
    pts = [complex(math.log(e), math.log(v))
           for e, v in zip(result.eps_values, result.observable)]
    canvas.markers(pts, color="#b03030", r=3.0)
    c0 = np.mean([v.imag - result.fitted_exponent * v.real for v in pts])
    fit = [complex(x, result.fitted_exponent * x + c0)
           for x in (rect.re_min + 0.1, rect.re_max - 0.1)]
    canvas.polyline(fit, color="#30a050", dashed=True)
    path = cfg.out + ".svg"
    canvas.save(path)
    print(path)
    print(f"fitted exponent: {result.fitted_exponent:.4f}")
    return 0


# -- argument parsing ---------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="zs-spectra",
        description="Spectra of the focusing Zakharov-Shabat operator "
                    "with periodic potentials")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("spectrum", "discriminant", "dirichlet", "bounds-audit",
                 "sweep", "validate", "figure"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--kind")
        sp.add_argument("--A", type=float)
        sp.add_argument("--V", type=float)
        sp.add_argument("--m", type=float)
        sp.add_argument("--L", type=float)
        sp.add_argument("--S", type=float)
        sp.add_argument("--eps", type=float, nargs="+")
        sp.add_argument("--engine", choices=("hill", "monodromy", "both"))
        sp.add_argument("--window", type=float, nargs=4,
                        metavar=("RE_MIN", "RE_MAX", "IM_MIN", "IM_MAX"))
        sp.add_argument("--nu-points", type=int, dest="nu_points")
        sp.add_argument("--n-modes", type=int, dest="n_modes")
        sp.add_argument("--residual-tol", type=float, dest="residual_tol")
        sp.add_argument("--outputs", help="comma list: json,csv,svg")
        sp.add_argument("--out", help="output path prefix")
        sp.add_argument("--n-disc", type=int, dest="n_disc")
        sp.add_argument("--delta", type=float)
        sp.add_argument("--observable")
        sp.add_argument("--bc-variant", dest="bc_variant",
                        choices=("sum", "difference"))
        sp.add_argument("--name", help="figure name (figure subcommand)")
    return ap


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    data: dict = {}
    if args.config:
        with open(args.config) as fh:
            raw = json.load(fh)
        pot_spec = raw.pop("potential", {})
        for key in ("kind", "A", "V", "m", "L", "S"):
            if key in pot_spec:
                data[key] = pot_spec[key]
        data.update(raw)
    for key in ("kind", "A", "V", "m", "L", "S", "engine", "window",
                "nu_points", "n_modes", "residual_tol", "out", "n_disc",
                "delta", "observable", "bc_variant", "name"):
        val = getattr(args, key, None)
        if val is not None:
            data[key] = val
    if getattr(args, "eps", None) is not None:
        data["eps"] = args.eps if len(args.eps) > 1 else args.eps[0]
    if getattr(args, "outputs", None):
        data["outputs"] = [s.strip() for s in args.outputs.split(",")]
    known = set(RunConfig.__dataclass_fields__)
    for key in data:
        if key not in known:
            raise ConfigError(f"{key}: unknown config key")
    return RunConfig(**data).validate()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "spectrum": cmd_spectrum,
        "discriminant": cmd_discriminant,
        "dirichlet": cmd_dirichlet,
        "bounds-audit": cmd_bounds_audit,
        "sweep": cmd_sweep,
        "validate": cmd_validate,
        "figure": cmd_figure,
    }
    try:
        cfg = _config_from_args(args)
        return handlers[args.command](cfg)
    except ZsSpectraError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for types, code in _EXIT_CODES:
            if isinstance(exc, types):
                return code
        return 1


if __name__ == "__main__":
    sys.exit(main())
