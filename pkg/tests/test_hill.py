import math

import numpy as np
import pytest

from zs_spectra import analytic, potential as pot
from zs_spectra.errors import DomainError
from zs_spectra.hill import (HillConfig, assemble_hill_matrix, default_n_modes,
                             hill_eigenvalues, lax_spectrum_hill)
from zs_spectra.spectra import floquet_roots
from zs_spectra.util import Rectangle


def test_free_problem_eigenvalue_pattern():
    p = pot.zero(2 * math.pi)
    ev = np.sort_complex(hill_eigenvalues(p, 0.3, HillConfig(n_modes=8)))
    expect = np.sort_complex(np.array(
        [-(j + 0.3) for j in range(-8, 9)] + [j + 0.3 for j in range(-8, 9)],
        dtype=complex))
    assert np.max(np.abs(ev - expect)) < 1e-12


def test_constant_block_dispersion():
    # each Fourier block contributes z^2 = (eps(k_j + nu))^2 - A^2
    p = pot.constant(1.0, 2 * math.pi)
    nu = 0.25
    ev = hill_eigenvalues(p, nu, HillConfig(n_modes=12))
    k = np.arange(-12, 13) + nu
    expect = np.concatenate([np.sqrt(k * k - 1.0 + 0j),
                             -np.sqrt(k * k - 1.0 + 0j)])
    assert len(ev) == len(expect)
    for z in expect:
        assert np.min(np.abs(ev - z)) < 1e-10


def test_plane_wave_single_toeplitz_diagonal():
    p = pot.plane_wave(1.0, 1.0)
    cfg = HillConfig(n_modes=8).resolved(p)
    mat = assemble_hill_matrix(p, 0.0, cfg)
    dim = 2 * cfg.n_modes + 1
    ur = mat[:dim, dim:]
    ll = mat[dim:, :dim]
    # q = e^{ix} has a single harmonic: one sub/superdiagonal per block
    assert np.max(np.abs(np.diag(ur, -1) + 1j)) < 1e-12
    ur_zeroed = ur - np.diag(np.diag(ur, -1), -1)
    assert np.max(np.abs(ur_zeroed)) < 1e-12
    assert np.max(np.abs(np.diag(ll, 1) + 1j)) < 1e-12
    ll_zeroed = ll - np.diag(np.diag(ll, 1), 1)
    assert np.max(np.abs(ll_zeroed)) < 1e-12


def test_real_potential_blocks_coincide(dn_pot):
    cfg = HillConfig(n_modes=16).resolved(dn_pot)
    mat = assemble_hill_matrix(dn_pot, 0.1, cfg)
    dim = 2 * cfg.n_modes + 1
    assert np.max(np.abs(mat[:dim, dim:] - mat[dim:, :dim])) < 1e-12


def test_constant_cloud_on_cross():
    p = pot.constant(1.0, 2 * math.pi)
    cloud = lax_spectrum_hill(p, HillConfig(eps=1.0, n_modes=64))
    desc = analytic.constant_lax_spectrum(1.0)
    assert len(cloud) > 300
    assert max(desc.distance(pt.z) for pt in cloud.points) < 1e-6
    assert max(pt.residual for pt in cloud.points) < 1e-6


def test_truncation_convergence_constant():
    p = pot.constant(1.0, 2 * math.pi)
    win = Rectangle(-3.0, 3.0, -1.5, 1.5)
    a = lax_spectrum_hill(p, HillConfig(n_modes=32, window=win)).zs()
    b = lax_spectrum_hill(p, HillConfig(n_modes=64, window=win)).zs()
    a = np.array(sorted(a, key=lambda z: (round(z.real, 6), z.imag)))
    for z in a:
        assert np.min(np.abs(b - z)) < 1e-8


def test_cloud_schwarz_and_quartet_symmetry(dn_pot):
    cloud = lax_spectrum_hill(dn_pot, HillConfig(eps=0.5))
    zs = cloud.zs()
    for z in zs:
        assert np.min(np.abs(zs - np.conj(z))) < 1e-8       # Schwarz
        assert np.min(np.abs(zs - (-np.conj(z)))) < 1e-8    # quartet (even)


def test_nu_periodicity(dn_pot):
    # spectra at nu and nu + 2 pi / L coincide inside the window
    L = dn_pot.period
    nu = 0.2
    win = Rectangle(-2.0, 2.0, -1.2, 1.2)
    cfg = HillConfig(eps=0.5, n_modes=48, window=win)
    a = hill_eigenvalues(dn_pot, nu, cfg)
    b = hill_eigenvalues(dn_pot, nu + 2 * math.pi / L, cfg)
    a = a[(np.abs(a.real) < 2) & (np.abs(a.imag) < 1.2)]
    for z in a:
        assert np.min(np.abs(b - z)) < 1e-8


def test_engine_completeness_against_root_finder(dn_pot):
    # every Floquet root in the window appears among the raw eigenvalues
    eps, nu = 0.5, 0.2
    win = Rectangle(0.15, 1.4, -0.55, 0.55)
    roots = floquet_roots(dn_pot, eps, nu, win)
    assert len(roots) >= 2
    ev = hill_eigenvalues(dn_pot, nu, HillConfig(eps=eps))
    for z in roots:
        assert np.min(np.abs(ev - z)) < 1e-6


def test_discontinuous_band_edge_two_engines(signum_pot):
    # the Fourier engine reproduces a complex band edge found by the
    # root engine once the truncation resolves the jump
    eps = 0.05
    edge = floquet_roots(signum_pot, eps, math.pi / signum_pot.period,
                         Rectangle(0.1, 0.25, 0.35, 0.5))
    assert len(edge) == 1
    ev = hill_eigenvalues(signum_pot, math.pi / signum_pot.period,
                          HillConfig(eps=eps, n_modes=256))
    assert np.min(np.abs(ev - edge[0])) < 1e-5


def test_default_mode_heuristic(dn_pot):
    assert default_n_modes(dn_pot, 1.0) == 32
    assert default_n_modes(dn_pot, 0.1) > 32


def test_config_validation(dn_pot):
    with pytest.raises(DomainError):
        HillConfig(n_modes=4).resolved(dn_pot)
    with pytest.raises(DomainError):
        HillConfig(nu_grid=np.array([0.3, 0.1])).resolved(dn_pot)


def test_cloud_points_sorted_and_tagged(constant_pot):
    cloud = lax_spectrum_hill(constant_pot, HillConfig(n_modes=32))
    keys = [(pt.nu, pt.z.real, pt.z.imag) for pt in cloud.points]
    assert keys == sorted(keys)
    assert all(pt.engine == "hill" for pt in cloud.points)
