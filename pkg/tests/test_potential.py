import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from zs_spectra import potential as pot
from zs_spectra.errors import DiscontinuityError, DomainError

ALL_BUILTINS = [
    pot.constant(1.0),
    pot.plane_wave(1.0, 1.0),
    pot.signum(1.0, 2.0),
    pot.exp_sin_sq(),
    pot.jacobi_dn_potential(0.6),
    pot.rapid_phase_cos(1.0, 1.0),
    pot.rapid_phase_dn(0.88, 2.0),
]


# -- evaluation --------------------------------------------------------------

def test_eval_point_values():
    assert pot.constant(1.0).eval(3.7) == pytest.approx(1.0)
    assert pot.plane_wave(1.0, 1.0).eval(0.0) == pytest.approx(1.0)
    sg = pot.signum(1.0, 2.0)
    assert sg.eval(0.5) == pytest.approx(1.0)
    assert sg.eval(-0.5) == pytest.approx(-1.0)
    assert pot.jacobi_dn_potential(0.6).eval(0.0) == pytest.approx(1.0)


@pytest.mark.parametrize("p", ALL_BUILTINS, ids=lambda p: p.label)
def test_periodicity(p):
    x = np.linspace(-2.3, 2.9, 1000) * p.period
    a = p.eval(x, 0.3)
    b = p.eval(x + p.period, 0.3)
    assert np.max(np.abs(a - b) / (1.0 + np.abs(a))) < 1e-12


@given(st.floats(-50.0, 50.0))
@settings(max_examples=60, deadline=None)
def test_periodicity_property(x):
    p = pot.jacobi_dn_potential(0.6)
    assert abs(p.eval(x + p.period) - p.eval(x)) <= 1e-12 * (1 + abs(p.eval(x)))


def test_scalar_evaluator_consistency():
    for p in ALL_BUILTINS:
        f = p.scalar_evaluator(0.37)
        for x in np.linspace(0.13, 3.7, 9):
            assert f(float(x)) == pytest.approx(complex(p.eval(x, 0.37)),
                                                abs=1e-13)


# -- derivatives -------------------------------------------------------------

def test_derivative_point_values():
    assert pot.constant(2.5).eval_derivative(1.3) == 0.0
    assert pot.plane_wave(1.0, 2.0, L=math.pi).eval_derivative(0.0) == \
        pytest.approx(2.0j)
    # q' = -sin(2x) e^{-sin^2 x}; at pi/4 this is -e^{-1/2}
    got = pot.exp_sin_sq().eval_derivative(math.pi / 4)
    assert got == pytest.approx(-math.exp(-0.5), abs=1e-14)


@pytest.mark.parametrize("p", [p for p in ALL_BUILTINS if not p.discontinuities],
                         ids=lambda p: p.label)
def test_derivative_matches_centered_difference(p):
    eps = 0.41
    h = 1e-6
    xs = np.linspace(0.05, p.period - 0.05, 100)
    fd = (p.eval(xs + h, eps) - p.eval(xs - h, eps)) / (2 * h)
    assert np.max(np.abs(p.eval_derivative(xs, eps) - fd)) < 1e-6


def test_derivative_refuses_jump():
    sg = pot.signum(1.0, 2.0)
    with pytest.raises(DiscontinuityError):
        sg.eval_derivative(1.0)
    with pytest.raises(DiscontinuityError):
        sg.eval_derivative(0.0)
    assert sg.eval_derivative(0.5) == 0.0


# -- norms -------------------------------------------------------------------

def test_norm_closed_forms():
    n = pot.plane_wave(2.0, 3.0).norms()
    assert n.sup_norm == pytest.approx(2.0)
    assert n.deriv_sup_norm == pytest.approx(6.0)
    assert pot.jacobi_dn_potential(0.31).norms().sup_norm == pytest.approx(1.0)
    c = pot.constant(1.0, 2 * math.pi).norms()
    assert c.l2_norm_sq == pytest.approx(2 * math.pi, rel=1e-12)


def test_signum_norm_markers():
    n = pot.signum(1.0, 2.0).norms()
    assert n.sup_norm == 1.0
    assert math.isinf(n.deriv_sup_norm)
    assert math.isinf(n.log_deriv_sup_norm)
    assert n.l2_norm_sq == pytest.approx(2.0)


def test_exp_sin_sq_deriv_norm_matches_sampling():
    p = pot.exp_sin_sq()
    closed = p.norms().deriv_sup_norm
    xs = np.linspace(0, p.period, 200_001)
    sampled = np.max(np.abs(p.eval_derivative(xs)))
    assert closed == pytest.approx(sampled, rel=1e-9)


def test_dn_norms_against_sampling():
    p = pot.jacobi_dn_potential(0.6)
    n = p.norms()
    xs = np.linspace(1e-4, p.period, 100_001)
    q = p.eval(xs).real
    dq = p.eval_derivative(xs).real
    assert n.deriv_sup_norm == pytest.approx(np.max(np.abs(dq)), rel=1e-7)
    assert n.log_deriv_sup_norm == pytest.approx(np.max(np.abs(dq / q)),
                                                 rel=1e-7)
    ref, _ = quad(lambda x: p.eval(x).real ** 2, 0, p.period, epsrel=1e-12)
    assert n.l2_norm_sq == pytest.approx(ref, rel=1e-10)


def test_rapid_phase_norms_scale_with_eps():
    p = pot.rapid_phase_cos(1.0, 1.0)
    n1 = p.norms(0.5)
    n2 = p.norms(0.25)
    assert n1.sup_norm == n2.sup_norm == 1.0
    assert n1.deriv_sup_norm == pytest.approx(2.0 / 0.5)
    assert n2.deriv_sup_norm == pytest.approx(2.0 / 0.25)


@pytest.mark.parametrize("p", ALL_BUILTINS, ids=lambda p: p.label)
def test_norm_dominance(p):
    n = p.norms(0.3)
    assert n.l2_norm_sq <= p.period * n.sup_norm ** 2 + 1e-9


# -- Fourier -----------------------------------------------------------------

def test_fourier_constant_and_plane_wave():
    c = pot.constant(1.0).fourier_coefficients(n_modes=8)
    assert c[8] == pytest.approx(1.0)
    assert np.max(np.abs(np.delete(c, 8))) < 1e-14
    p = pot.plane_wave(1.0, 1.0)  # single harmonic e^{ix}, L = 2 pi
    c = p.fourier_coefficients(n_modes=8)
    assert c[9] == pytest.approx(1.0)
    assert np.max(np.abs(np.delete(c, 9))) < 1e-14


def test_fourier_signum_exact_vs_quadrature():
    A, L = 1.0, 2.0
    p = pot.signum(A, L)
    c = p.fourier_coefficients(n_modes=6)
    # independent oracle: direct integrals of q against the basis
    for j in (1, 2, 3):
        re, _ = quad(lambda x: (p.eval(x) * np.exp(-2j * math.pi * j * x / L)).real,
                     0, L, points=[L / 2], limit=200)
        im, _ = quad(lambda x: (p.eval(x) * np.exp(-2j * math.pi * j * x / L)).imag,
                     0, L, points=[L / 2], limit=200)
        assert c[6 + j] == pytest.approx((re + 1j * im) / L, abs=1e-10)
    assert c[7] == pytest.approx(2.0 / (1j * math.pi), abs=1e-14)
    assert abs(c[8]) < 1e-14


@pytest.mark.parametrize("p", [pot.exp_sin_sq(), pot.jacobi_dn_potential(0.6),
                               pot.rapid_phase_cos(1.0, 1.0)],
                         ids=lambda p: p.label)
def test_fourier_round_trip(p):
    eps = 1.0
    n_modes = 64
    c = p.fourier_coefficients(eps, n_modes)
    x = np.linspace(0, p.period, 256, endpoint=False)
    j = np.arange(-n_modes, n_modes + 1)
    rebuilt = np.exp(2j * math.pi * np.outer(x, j) / p.period) @ c
    assert np.max(np.abs(rebuilt - p.eval(x, eps))) < 1e-10


def test_sampled_potential_round_trip():
    base = pot.exp_sin_sq()
    grid = np.linspace(0, base.period, 128, endpoint=False)
    p = pot.sampled(base.eval(grid), base.period)
    xs = np.linspace(0, base.period, 37)
    assert np.max(np.abs(p.eval(xs) - base.eval(xs))) < 1e-12


# -- construction guards ------------------------------------------------------

def test_constructor_validation():
    with pytest.raises(DomainError):
        pot.PeriodicPotential(pot.Kind.CONSTANT, period=-1.0)
    with pytest.raises(DomainError):
        pot.jacobi_dn_potential(1.2)
    with pytest.raises(DomainError):
        pot.plane_wave(1.0, 1.0, L=1.0)  # V*L not a multiple of 2 pi
    with pytest.raises(DomainError):
        pot.by_name("nope")


def test_by_name_round_trip():
    from zs_spectra.elliptic import elliptic_K
    p = pot.by_name("jacobi_dn", m=0.6)
    assert p.kind is pot.Kind.JACOBI_DN
    assert p.period == pytest.approx(2 * elliptic_K(0.6), rel=1e-12)
