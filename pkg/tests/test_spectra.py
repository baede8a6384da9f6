import math

import numpy as np
import pytest

from zs_spectra import analytic, potential as pot
from zs_spectra.monodromy import discriminant_batch
from zs_spectra import spectra
from zs_spectra.spectra import (classify_bands, count_zeros_rectangle,
                                dirichlet_spectrum, floquet_roots,
                                periodic_antiperiodic_eigenvalues,
                                trace_gamma_contours)
from zs_spectra.util import Rectangle


def _match_sets(got, expect, tol):
    got = sorted(got, key=lambda z: (round(z.real, 9), z.imag))
    expect = sorted(expect, key=lambda z: (round(z.real, 9), z.imag))
    assert len(got) == len(expect), (got, expect)
    for g, e in zip(got, expect):
        assert abs(g - e) <= tol, (g, e)


# -- Floquet / band-edge roots -----------------------------------------------

def test_free_floquet_lattice():
    p = pot.zero(2 * math.pi)
    roots = floquet_roots(p, 1.0, 0.0, Rectangle(-2.2, 2.2, -1.0, 1.0))
    # cos(2 pi z) = 1 has double roots at the integers
    _match_sets(roots, [n + 0j for n in (-2, -1, 0, 1, 2) for _ in range(2)],
                1e-7)


def test_constant_periodic_roots_window():
    p = pot.constant(1.0, 2 * math.pi)
    roots = floquet_roots(p, 1.0, 0.0, Rectangle(-0.5, 0.5, -1.5, 1.5))
    # xi in {0, 1}: band edges at +-i plus a fourfold periodic point at 0
    _match_sets(roots, [1j, -1j, 0, 0, 0, 0], 1e-6)


def test_floquet_roots_residual_invariant(exp_sin_sq_pot):
    eps, nu = 0.7, 0.4
    roots = floquet_roots(exp_sin_sq_pot, eps, nu,
                          Rectangle(-1.2, 1.2, -0.8, 0.8))
    d, _, _ = discriminant_batch(exp_sin_sq_pot, np.array(roots), eps, 1e-12)
    assert np.max(np.abs(d - math.cos(nu * exp_sin_sq_pot.period))) < 1e-9


def test_floquet_root_multiset_schwarz_closed(dn_pot):
    roots = np.array(floquet_roots(dn_pot, 0.5, 0.3,
                                   Rectangle(-1.0, 1.0, -0.7, 0.7)))
    for z in roots:
        assert np.min(np.abs(roots - np.conj(z))) < 1e-8


def test_periodic_antiperiodic_tagging():
    p = pot.zero(2.0)
    got = periodic_antiperiodic_eigenvalues(p, 1.0,
                                            Rectangle(-0.2, 3.9, -0.5, 0.5))
    # cos(2z) = +1 at z = k pi (periodic), -1 at half-lattice (antiperiodic)
    for z, kind in got:
        n = z.real / (math.pi / 2)
        assert abs(n - round(n)) < 1e-7
        expect = "periodic" if round(n) % 2 == 0 else "antiperiodic"
        assert kind == expect


def test_band_edge_residuals(dn_pot):
    got = periodic_antiperiodic_eigenvalues(dn_pot, 0.5,
                                            Rectangle(-1.3, 1.3, -0.9, 0.9))
    zs = np.array([z for z, _ in got])
    d, _, _ = discriminant_batch(dn_pot, zs, 0.5, 1e-12)
    assert np.max(np.abs(d * d - 1.0)) < 1e-9


# -- Dirichlet ----------------------------------------------------------------

def test_constant_dirichlet_matches_lattice_oracle():
    p = pot.constant(1.0, math.pi)
    got = dirichlet_spectrum(p, 1.0, Rectangle(-2.0, 2.0, -1.4, 1.4))
    # oracle: lattice filtered by the closed-form Dirichlet function,
    # with mu = 0 a double zero
    oracle = list(analytic.constant_dirichlet(1.0, math.pi, 1.0, 2.0))
    _match_sets(got, oracle + [0.0], 1e-8)


def test_free_dirichlet_lattice():
    p = pot.zero(2 * math.pi)
    got = dirichlet_spectrum(p, 1.0, Rectangle(-1.2, 1.2, -0.4, 0.4))
    _match_sets(got, [-1.0, -0.5, 0.0, 0.5, 1.0], 1e-9)


def test_signum_dirichlet_in_strip(signum_pot):
    got = dirichlet_spectrum(signum_pot, 1.0, Rectangle(-2.0, 2.0, -1.3, 1.3))
    assert got, "window should contain Dirichlet eigenvalues"
    assert all(abs(mu.imag) <= 1.0 + 1e-9 for mu in got)


def test_dirichlet_stable_under_tolerance_refinement(exp_sin_sq_pot):
    win = Rectangle(-1.5, 1.5, -1.1, 1.1)
    a = np.array(dirichlet_spectrum(exp_sin_sq_pot, 1.0, win, tol=1e-10))
    b = np.array(dirichlet_spectrum(exp_sin_sq_pot, 1.0, win, tol=1e-12))
    assert len(a) == len(b)
    for z in a:
        assert np.min(np.abs(b - z)) < 1e-8


def test_dirichlet_difference_variant():
    # the alternative boundary condition keeps -iA instead of +iA
    p = pot.constant(1.0, 2 * math.pi)
    got = dirichlet_spectrum(p, 1.0, Rectangle(-0.4, 0.4, -1.2, 1.2),
                             bc_variant="difference")
    assert any(abs(mu + 1j) < 1e-8 for mu in got)
    assert not any(abs(mu - 1j) < 1e-8 for mu in got)


# -- counting -----------------------------------------------------------------

def test_count_zeros_free_problem():
    p = pot.zero(2 * math.pi)
    # cos(2 pi z): two zeros at +-1/4 inside a slightly shrunk rectangle
    # (the nominal 1.5 * pi eps / L half-width puts zeros on the boundary)
    r = count_zeros_rectangle(p, 1.0, Rectangle(-0.735, 0.735, -1, 1), "delta")
    assert r.zero_count == 2
    r2 = count_zeros_rectangle(p, 1.0, Rectangle(-0.735, 0.735, -1, 1),
                               "delta_prime")
    assert r2.zero_count == 3  # sin(2 pi z): 0, +-1/2


def test_count_zeros_matches_cosine_far_out(dn_pot):
    # far along the strip the discriminant counts like the free cosine
    eps = 1.0
    L = dn_pot.period
    k = 12
    lo = (k - 0.5) * math.pi * eps / L
    hi = (k + 1.5) * math.pi * eps / L
    rect = Rectangle(lo, hi, -0.95, 0.95)
    got = count_zeros_rectangle(dn_pot, eps, rect, "delta").zero_count
    free = count_zeros_rectangle(pot.zero(L), eps, rect, "delta").zero_count
    assert got == free == 2


def test_count_zeros_multiple_point():
    p = pot.constant(1.0, 2 * math.pi)
    r = count_zeros_rectangle(p, 1.0, Rectangle(-0.3, 0.3, -0.3, 0.3),
                              "delta_minus_one")
    assert r.zero_count >= 1  # fourfold periodic point at the origin
    assert r.zero_count == 4


# -- tracing ------------------------------------------------------------------

def test_constant_band_geometry(constant_pot):
    res = trace_gamma_contours(constant_pot, 1.0,
                               Rectangle(-2.0, 2.0, -1.5, 1.5))
    off = res.off_axis_bands()
    assert len(off) == 1
    band = off[0]
    assert np.max(np.abs(band.polyline.real)) < 1e-8
    assert band.polyline.imag.min() == pytest.approx(-1.0, abs=1e-8)
    assert band.polyline.imag.max() == pytest.approx(1.0, abs=1e-8)
    kinds = {e[1] for e in band.edges if e is not None}
    assert kinds == {"periodic"}
    cls = classify_bands(res)
    assert cls.n_spines == 0 and cls.n_non_spine_off_real == 1


def test_band_vertices_stay_on_level_set(constant_pot):
    res = trace_gamma_contours(constant_pot, 1.0,
                               Rectangle(-2.0, 2.0, -1.5, 1.5))
    for band in res.bands:
        assert np.max(np.abs(band.delta_values.imag)) < 1e-7
        assert np.max(np.abs(band.delta_values.real)) <= 1.0 + 1e-7


def test_signum_spines_near_lattice(signum_pot):
    eps = 0.019
    region = Rectangle(2.0, 2.35, -0.2, 0.2)
    res = trace_gamma_contours(signum_pot, eps, region)
    cls = classify_bands(res)
    assert cls.n_spines >= 3
    assert all(d < 0.05 for d in cls.lattice_distances)


def test_dn_bands_confined_to_axes(dn_pot):
    # real/even potential whose band edges are on the axes: every traced
    # band must lie on the axes as well
    eps = 0.5
    res = trace_gamma_contours(dn_pot, eps, Rectangle(-1.5, 1.5, -1.2, 1.2))
    edges = periodic_antiperiodic_eigenvalues(dn_pot, eps,
                                              Rectangle(-1.3, 1.3, -0.9, 0.9))
    assert all(min(abs(z.imag), abs(z.real)) < 1e-6 for z, _ in edges)
    for band in res.bands:
        dist = np.minimum(np.abs(band.polyline.imag),
                          np.abs(band.polyline.real))
        assert np.max(dist) < 1e-5


def test_imag_axis_band_edges_refined(dn_pot):
    res = trace_gamma_contours(dn_pot, 0.5, Rectangle(-1.5, 1.5, -1.2, 1.2))
    axis = [b for b in res.bands if b.on_imag_axis]
    assert axis
    for band in axis:
        for edge in band.edges:
            if edge is not None:
                z, kind = edge
                d, _, _ = discriminant_batch(dn_pot, [z], 0.5, 1e-12)
                target = 1.0 if kind == "periodic" else -1.0
                assert abs(d[0] - target) < 1e-9
