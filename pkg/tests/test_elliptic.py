import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from zs_spectra.elliptic import (elliptic_E, elliptic_K, jacobi_dn,
                                 jacobi_dn_derivative, jacobi_dn_scalar)
from zs_spectra.errors import DomainError


def test_complete_integral_special_values():
    assert elliptic_K(0.0) == pytest.approx(math.pi / 2, abs=1e-15)
    assert elliptic_E(0.0) == pytest.approx(math.pi / 2, abs=1e-15)
    assert elliptic_E(1.0) == 1.0


@pytest.mark.parametrize("m", [0.1, 0.3, 0.6, 0.88, 0.999])
def test_complete_integrals_against_scipy(m):
    assert elliptic_K(m) == pytest.approx(special.ellipk(m), rel=1e-13)
    assert elliptic_E(m) == pytest.approx(special.ellipe(m), rel=1e-13)


def test_dn_degenerate_limits():
    x = np.linspace(-5, 5, 41)
    assert np.allclose(jacobi_dn(x, 0.0), 1.0)
    # m=1 collapses to the solitonic sech profile
    assert np.allclose(jacobi_dn(x, 1.0), 1.0 / np.cosh(x), atol=1e-14)


@pytest.mark.parametrize("m", [0.2, 0.6, 0.95])
def test_dn_quarter_period_identity(m):
    assert jacobi_dn(elliptic_K(m), m) == pytest.approx(
        math.sqrt(1.0 - m), rel=1e-12)


@pytest.mark.parametrize("m", [0.05, 0.5, 0.6, 0.9])
def test_dn_against_scipy(m):
    x = np.linspace(-7.0, 7.0, 301)
    _, _, dn_ref, _ = special.ellipj(x, m)
    assert np.max(np.abs(jacobi_dn(x, m) - dn_ref)) < 1e-12


def test_dn_periodicity():
    m = 0.6
    period = 2.0 * elliptic_K(m)
    x = np.linspace(0, period, 100)
    assert np.max(np.abs(jacobi_dn(x + period, m) - jacobi_dn(x, m))) < 1e-12


@given(st.floats(-20.0, 20.0), st.floats(0.0, 0.99))
@settings(max_examples=80, deadline=None)
def test_dn_range_property(x, m):
    v = jacobi_dn(x, m)
    assert math.sqrt(1.0 - m) - 1e-12 <= v <= 1.0 + 1e-12


def test_dn_scalar_closure_matches_array():
    m = 0.88
    dn = jacobi_dn_scalar(m)
    xs = np.linspace(-3, 9, 57)
    ref = jacobi_dn(xs, m)
    got = np.array([dn(float(x)) for x in xs])
    assert np.max(np.abs(got - ref)) < 1e-14


def test_dn_derivative_matches_finite_difference():
    m, h = 0.6, 1e-6
    for x in (0.3, 1.1, 2.7):
        fd = (jacobi_dn(x + h, m) - jacobi_dn(x - h, m)) / (2 * h)
        assert jacobi_dn_derivative(x, m) == pytest.approx(fd, abs=1e-9)


def test_domain_errors():
    with pytest.raises(DomainError):
        elliptic_K(1.0)
    with pytest.raises(DomainError):
        jacobi_dn(0.0, -0.1)
    with pytest.raises(DomainError):
        jacobi_dn(0.0, 1.5)
