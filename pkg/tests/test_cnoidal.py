"""Cnoidal stationary waves: roots, moduli, closure, stationarity."""

import numpy as np
import pytest

from gibbskdv.cnoidal import (classify_constant_points, cnoidal_profile,
                              cubic_roots_trig, first_integral_values,
                              modulus_from_roots, modulus_identity_rhs,
                              modulus_with_index, second_variation_form,
                              solve_on_sphere, solve_periodic_family,
                              stationarity_residual)
from gibbskdv.elliptic import complete_elliptic_k
from gibbskdv.fields import FourierField, from_grid, grid_points


def test_roots_satisfy_vieta():
    rng = np.random.default_rng(30)
    for _ in range(25):
        beta = rng.uniform(0.5, 8.0)
        lam = -rng.uniform(0.3, 6.0)
        c_bound = 2.0 * lam ** 3 / (3.0 * beta ** 2)
        C = rng.uniform(0.02, 0.98) * c_bound
        r = cubic_roots_trig(beta, lam, C)
        assert r.all_real
        assert r.f1 >= r.f2 >= r.f3
        assert abs((r.f1 + r.f2 + r.f3) - (-3.0 * lam / beta)) < 1e-9 * max(1, abs(lam / beta))
        e2 = r.f1 * r.f2 + r.f1 * r.f3 + r.f2 * r.f3
        assert abs(e2) < 1e-8 * max(1.0, r.f1 ** 2)
        assert abs(r.f1 * r.f2 * r.f3 - 6.0 * C / beta) < 1e-8 * max(1.0, abs(C / beta))
        assert r.cubic_residual(beta, lam, C) < 1e-9 * max(1.0, abs(C))


def test_known_root_set():
    # beta=6, lambda=-14/3, C=-4/3 factors as (f-2)(f-1)(f+2/3)
    r = cubic_roots_trig(6.0, -14.0 / 3.0, -4.0 / 3.0)
    assert abs(r.f1 - 2.0) < 1e-12
    assert abs(r.f2 - 1.0) < 1e-12
    assert abs(r.f3 + 2.0 / 3.0) < 1e-12
    mod, ell = modulus_from_roots(r, 6.0)
    assert abs(mod.ksq - (1.0 / (8.0 / 3.0))) < 1e-12
    assert abs(mod.ksq * ell * (ell + 1.0) - 6.0 * (8.0 / 3.0)) < 1e-10


def test_modulus_identity_reconciliation():
    # the closed-form gamma expression lands on -1/k^2 for real root sets
    rng = np.random.default_rng(31)
    for _ in range(10):
        beta = rng.uniform(0.5, 5.0)
        lam = -rng.uniform(0.5, 4.0)
        C = rng.uniform(0.05, 0.95) * 2.0 * lam ** 3 / (3.0 * beta ** 2)
        r = cubic_roots_trig(beta, lam, C)
        mod, _ = modulus_from_roots(r, beta)
        assert abs(modulus_identity_rhs(r.gamma) + 1.0 / mod.ksq) < 1e-6 / mod.ksq


def test_modulus_with_index_prescribes_ell():
    mod, roots, C = modulus_with_index(1.0, -0.5, 1.0)
    _, ell = modulus_from_roots(roots, 1.0)
    assert abs(ell - 1.0) < 1e-10
    assert 0.0 < mod.k < 1.0
    # scaling map (lam, C) -> (s lam, s^3 C) multiplies ell(ell+1) by s and
    # preserves k: s=3 sends (lam=-0.5, ell=1) to (lam=-1.5, ell=2)
    mod2, roots2, _ = modulus_with_index(1.0, -1.5, 2.0)
    assert abs(mod2.k - mod.k) < 1e-10
    assert abs(roots2.f1 - 3.0 * roots.f1) < 1e-8


def test_modulus_with_index_floor_raises():
    # ell(ell+1) = -3 lam floor: for lam = -2 that is ell ~ 2
    with pytest.raises(ValueError):
        modulus_with_index(1.0, -2.0, 1.0)
    with pytest.raises(ValueError):
        modulus_with_index(1.0, 0.5, 3.0)
    with pytest.raises(ValueError):
        modulus_with_index(-1.0, -2.0, 3.0)


def test_periodic_family_closure_and_stationarity():
    for beta, lam, m in ((1.0, -1.5, 1), (1.0, -6.0, 2), (2.0, -3.0, 1)):
        wave = solve_periodic_family(beta, lam, m)
        assert wave is not None, (beta, lam, m)
        assert wave.periodicity_residual < 1e-9
        arg = 2.0 * np.pi * wave.arg_scale
        assert abs(arg - 2.0 * m * complete_elliptic_k(wave.k)) < 1e-9
        g = cnoidal_profile(wave, 1024)
        assert stationarity_residual(g, beta, lam) < 1e-8
        vals = first_integral_values(g, beta, lam)
        assert np.max(vals) - np.min(vals) < 1e-8


def test_periodic_family_none_when_closure_impossible():
    assert solve_periodic_family(1.0, -0.5, 2) is None
    assert solve_periodic_family(1.0, 0.0, 1) is None
    with pytest.raises(ValueError):
        solve_periodic_family(-1.0, -1.0, 1)
    with pytest.raises(ValueError):
        solve_periodic_family(1.0, -1.0, 0)


def test_profile_refuses_open_orbit():
    from gibbskdv.cnoidal import CnoidalParams
    r = cubic_roots_trig(6.0, -14.0 / 3.0, -4.0 / 3.0)
    mod, ell = modulus_from_roots(r, 6.0)
    open_wave = CnoidalParams(beta=6.0, lam=-14.0 / 3.0, C=-4.0 / 3.0,
                              roots=r, k=mod.k, ell=ell, m=1)
    assert open_wave.periodicity_residual > 1e-3
    with pytest.raises(ValueError):
        cnoidal_profile(open_wave, 256)


def test_solve_on_sphere_hits_norm():
    wave = solve_on_sphere(1.0, 9.0, 1, -30.0, -1.2)
    assert wave is not None
    g = cnoidal_profile(wave, 2048)
    assert abs(float(np.mean(g.values ** 2)) - 9.0) < 1e-8
    assert solve_on_sphere(1.0, 2.0, 1, -30.0, -1.2) is None


def test_second_variation_flags_unstable_direction():
    beta, lam = 1.0, -1.5
    wave = solve_periodic_family(beta, lam, 1)
    g = cnoidal_profile(wave, 512)
    # the derivative of the wave is a neutral direction of the second
    # variation (translation invariance)
    phi = from_grid(g, 64)
    from gibbskdv.fields import derivative
    neutral = derivative(phi)
    q = second_variation_form(g, beta, lam, neutral)
    scale = second_variation_form(
        g, beta, lam, FourierField(1.0, np.zeros(64), np.zeros(64)))
    assert abs(q) < 1e-6 * max(1.0, abs(scale))


def test_classify_constant_points():
    beta, N = 2.0, 4.0
    pts = classify_constant_points(beta, N)
    assert len(pts) == 2
    lo, hi = sorted(pts, key=lambda d: d["lambda"])
    # phi = +sqrt(N) quoted at lambda = -beta sqrt(N), energy +beta N^{3/2}/12
    assert abs(lo["lambda"] + beta * np.sqrt(N)) < 1e-12
    assert lo["phi"] == np.sqrt(N)
    assert abs(lo["energy"] - beta * N ** 1.5 / 12.0) < 1e-12
    assert not lo["local_min"]
    # phi = -sqrt(N) at lambda = beta sqrt(N)/2, energy -beta N^{3/2}/12
    assert abs(hi["lambda"] - 0.5 * beta * np.sqrt(N)) < 1e-12
    assert hi["phi"] == -np.sqrt(N)
    assert abs(hi["energy"] + beta * N ** 1.5 / 12.0) < 1e-12
    assert hi["local_min"]
