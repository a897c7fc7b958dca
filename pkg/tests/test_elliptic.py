"""Jacobi elliptic functions against closed forms and quadrature."""

import numpy as np
from scipy.integrate import quad

from gibbskdv.elliptic import (complete_elliptic_k, jacobi_am, jacobi_sn,
                               jacobi_sn_cn_dn, sn_sq_period)


def test_complete_k_degenerate_and_symmetric_point():
    assert abs(complete_elliptic_k(0.0) - np.pi / 2.0) < 1e-14
    # independent quadrature of the defining integral at k = 1/sqrt2
    k = 1.0 / np.sqrt(2.0)
    val, err = quad(lambda t: 1.0 / np.sqrt(1.0 - (k * np.sin(t)) ** 2),
                    0.0, np.pi / 2.0, epsabs=1e-14, epsrel=1e-14)
    assert err < 1e-12
    assert abs(complete_elliptic_k(k) - val) < 1e-12


def test_sn_reduces_to_sine_at_zero_modulus():
    x = np.linspace(-10, 10, 1000)
    assert np.max(np.abs(jacobi_sn(x, 0.0) - np.sin(x))) < 1e-12


def test_sn_at_quarter_period_is_one():
    for k in np.arange(0.1, 0.95, 0.1):
        K = complete_elliptic_k(k)
        assert abs(jacobi_sn(K, k) - 1.0) < 1e-12


def test_pythagorean_identities():
    rng = np.random.default_rng(20)
    x = rng.uniform(-8, 8, size=200)
    for k in (0.3, 0.7, 0.95):
        s, c, d = jacobi_sn_cn_dn(x, k)
        assert np.max(np.abs(s * s + c * c - 1.0)) < 1e-12
        assert np.max(np.abs(d * d + (k * s) ** 2 - 1.0)) < 1e-12


def test_sn_satisfies_defining_ode():
    # (sn')^2 = (1 - sn^2)(1 - k^2 sn^2), via centered differences
    k, h = 0.6, 1e-5
    x = np.linspace(0.2, 3.0, 40)
    s = jacobi_sn(x, k)
    ds = (jacobi_sn(x + h, k) - jacobi_sn(x - h, k)) / (2 * h)
    rhs = (1.0 - s ** 2) * (1.0 - (k * s) ** 2)
    assert np.max(np.abs(ds ** 2 - rhs)) < 1e-8


def test_amplitude_inverts_incomplete_integral():
    # am is the inverse of the incomplete elliptic integral of the first kind
    k = 0.8
    for phi in (0.3, 0.9, 1.4):
        u, _ = quad(lambda t: 1.0 / np.sqrt(1.0 - (k * np.sin(t)) ** 2), 0.0, phi)
        assert abs(float(jacobi_am(u, k)) - phi) < 1e-10


def test_sn_sq_period():
    for k in (0.2, 0.6, 0.9):
        p = sn_sq_period(k)
        assert abs(p - 2.0 * complete_elliptic_k(k)) < 1e-10
        x = np.linspace(0, 5, 50)
        s2 = jacobi_sn(x, k) ** 2
        s2p = jacobi_sn(x + p, k) ** 2
        assert np.max(np.abs(s2 - s2p)) < 1e-10
