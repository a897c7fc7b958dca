"""Hill discriminants, instability intervals, and the eigenvalue link."""

import numpy as np
import pytest

from gibbskdv.cnoidal import cnoidal_profile, solve_periodic_family
from gibbskdv.elliptic import complete_elliptic_k, jacobi_sn
from gibbskdv.fields import from_grid
from gibbskdv.floquet import (floquet_trace, hamel_min_check,
                              hill_galerkin_matrix, instability_intervals,
                              lame_band_edges, standard_lame_potential)


def zero_potential(x):
    return np.zeros_like(np.asarray(x, dtype=float))


def exact_free_trace(lam):
    if lam >= 0.0:
        return 2.0 * np.cos(2.0 * np.pi * np.sqrt(lam))
    return 2.0 * np.cosh(2.0 * np.pi * np.sqrt(-lam))


def test_zero_potential_trace_closed_form():
    for lam in (0.0, 0.17, 0.25, 1.0, 2.25, 5.0, 9.0):
        tr = floquet_trace(zero_potential, lam)
        assert abs(tr - exact_free_trace(lam)) < 1e-9, lam
    for lam in (-0.5, -2.0, -5.0):
        tr = floquet_trace(zero_potential, lam)
        assert abs(tr - exact_free_trace(lam)) < 1e-9 * exact_free_trace(lam)


def test_zero_potential_ground_state():
    res = instability_intervals(zero_potential, 1.0, (-1.0, 10.0),
                                scan_points=400)
    assert abs(res.lambda0) < 1e-8
    unstable = res.unstable_intervals
    assert len(unstable) == 1
    assert unstable[0][0] == -np.inf
    assert res.wronskian_err < 1e-9


def test_lame_ell_one_band_structure():
    k = 0.6
    q, period = standard_lame_potential(1, k)
    edges = lame_band_edges(1, k)
    assert np.allclose(edges, [k * k, 1.0, 1.0 + k * k], atol=1e-15)
    res = instability_intervals(q, 1.0, (-0.5, 4.0), scan_points=1200,
                                period=period)
    unstable = res.unstable_intervals
    assert len(unstable) == 2
    # ground state edge k^2, then the finite gap (1, 1 + k^2)
    assert abs(res.lambda0 - edges[0]) < 2e-8
    gap = unstable[1]
    assert abs(gap[0] - edges[1]) < 2e-8
    assert abs(gap[1] - edges[2]) < 2e-8


def test_lame_ell_two_band_structure():
    k = 0.5
    ksq = k * k
    q, period = standard_lame_potential(2, k)
    edges = lame_band_edges(2, k)
    expected = [2.0 * (1.0 + ksq) - 2.0 * np.sqrt(1.0 - ksq + ksq * ksq),
                1.0 + ksq, 1.0 + 4.0 * ksq, 4.0 + ksq,
                2.0 * (1.0 + ksq) + 2.0 * np.sqrt(1.0 - ksq + ksq * ksq)]
    assert np.allclose(edges, expected, atol=1e-12)
    res = instability_intervals(q, 1.0, (0.0, 8.0), scan_points=1600,
                                period=period)
    unstable = res.unstable_intervals
    assert len(unstable) == 3
    assert abs(res.lambda0 - expected[0]) < 1e-7
    assert abs(unstable[1][0] - expected[1]) < 1e-7
    assert abs(unstable[1][1] - expected[2]) < 1e-7
    assert abs(unstable[2][0] - expected[3]) < 1e-7
    assert abs(unstable[2][1] - expected[4]) < 1e-7


def test_cnoidal_hill_equals_scaled_lame():
    # the linearized operator around a cnoidal wave maps onto the
    # 12 k^2 sn^2 potential under rescaling by the interior argument scale
    beta, lam_wave = 1.0, -1.5
    wave = solve_periodic_family(beta, lam_wave, 1)
    g = cnoidal_profile(wave, 1024)
    alpha = wave.arg_scale
    ksq = wave.k ** 2

    def lame3(z):
        return -12.0 * ksq * jacobi_sn(z, wave.k) ** 2

    period3 = 2.0 * complete_elliptic_k(wave.k)
    for lam in (-3.0, -1.0, 0.5, 2.0):
        tr_cno = floquet_trace(g, lam, beta=beta)
        mu = (beta * wave.roots.f1 + lam) / alpha ** 2
        tr_lame = floquet_trace(lame3, mu, beta=1.0, period=period3)
        # the cnoidal problem runs m=1 periods of the sn^2 cell
        assert abs(tr_cno - tr_lame) < 1e-9, lam


def test_wronskian_is_monitored():
    res = instability_intervals(zero_potential, 1.0, (-0.25, 6.0),
                                scan_points=300)
    assert res.wronskian_err < 1e-9


def test_deep_lambda_segmentation():
    # monodromy entries reach e^{~15} here; the segmented determinant
    # product must keep the Wronskian drift tiny anyway
    tr = floquet_trace(zero_potential, -6.0)
    assert abs(tr - exact_free_trace(-6.0)) < 1e-6 * exact_free_trace(-6.0)


def test_range_too_narrow_raises():
    q, period = standard_lame_potential(1, 0.6)
    with pytest.raises(ValueError):
        instability_intervals(q, 1.0, (1.5, 4.0), scan_points=200,
                              period=period)


def test_thread_count_does_not_change_results():
    q, period = standard_lame_potential(1, 0.5)
    r1 = instability_intervals(q, 1.0, (-0.5, 3.0), scan_points=300,
                               period=period, threads=1)
    r2 = instability_intervals(q, 1.0, (-0.5, 3.0), scan_points=300,
                               period=period, threads=4)
    assert np.array_equal(r1.traces, r2.traces)
    assert r1.intervals == r2.intervals


def test_grid_potential_input():
    # GridField input goes through trigonometric interpolation
    beta, lam_wave = 1.0, -1.5
    wave = solve_periodic_family(beta, lam_wave, 1)
    g = cnoidal_profile(wave, 512)
    t1 = floquet_trace(g, 0.3, beta=beta)
    t2 = floquet_trace(g.values, 0.3, beta=beta)
    assert abs(t1 - t2) < 1e-12


def test_galerkin_matrix_and_hamel_check():
    beta, lam_wave = 1.0, -1.5
    wave = solve_periodic_family(beta, lam_wave, 1)
    g = cnoidal_profile(wave, 512)
    phi = from_grid(g, 48)
    with pytest.raises(ValueError):
        hill_galerkin_matrix(phi, beta, 0.0, 2)
    res = instability_intervals(g, beta, (-6.0, 2.0), scan_points=500)
    lam0 = res.lambda0
    below = hamel_min_check(phi, beta, lam0 - 0.05)
    above = hamel_min_check(phi, beta, lam0 + 0.05)
    assert below["is_local_min"]
    assert not above["is_local_min"]
    assert below["min_eig"] > 0.0 > above["min_eig"]


def test_standard_lame_validation():
    with pytest.raises(ValueError):
        standard_lame_potential(0, 0.5)
    with pytest.raises(ValueError):
        standard_lame_potential(1, 1.0)
    with pytest.raises(ValueError):
        lame_band_edges(3, 0.5)
