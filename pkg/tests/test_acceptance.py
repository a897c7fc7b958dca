"""Acceptance suite: fifteen end-to-end checks with pinned tolerances.

Each test prints one [PASS] line with its headline numbers and elapsed
time; a failed assertion keeps the line from printing, so the printed
lines are exactly the criteria that hold.  Run with -s to see them.
"""

import math
import time

import numpy as np
from scipy.integrate import quad as scipy_quad
from scipy.stats import ks_2samp

from gibbskdv.cnoidal import (
    classify_constant_points,
    cnoidal_profile,
    first_integral_values,
    modulus_with_index,
    solve_periodic_family,
    stationarity_residual,
)
from gibbskdv.concentration import (
    ball_quadrature,
    empirical_mgf,
    entropy_dirichlet_lowdim,
    inner_observable,
)
from gibbskdv.convexity import certify_convexity, scaled_hessian_form
from gibbskdv.elliptic import complete_elliptic_k, jacobi_sn
from gibbskdv.fields import (
    FourierField,
    dealiased_grid_size,
    from_grid,
    l2_norm_sq,
    to_grid,
)
from gibbskdv.floquet import (
    floquet_trace,
    hamel_min_check,
    instability_intervals,
    standard_lame_potential,
)
from gibbskdv.flow import (
    FlowConfig,
    evolve,
    invariance_experiment,
    reverse_state,
    traveling_wave_check,
)
from gibbskdv.hamiltonians import (
    EnsembleParams,
    NlsField,
    gibbs_potential,
    gibbs_potential_grad,
    mkdv_potential,
    mkdv_potential_grad,
    nls_potential,
    nls_potential_grad,
)
from gibbskdv.sampling import (
    log_interaction_weight,
    loop_scales,
    sample_gibbs,
)

# the small-coupling regime: beta sqrt(N) = sqrt(3) / (64 pi), taken at N = 1
BETA_SMALL = math.sqrt(3.0) / (64.0 * math.pi)


def _report(n, label, detail, t0, budget):
    elapsed = time.time() - t0
    assert elapsed < budget, f"criterion {n} overran its {budget:.0f}s budget"
    print(f"[PASS] criterion {n:02d} ({label}): {detail} "
          f"[{elapsed:.1f}s < {budget:.0f}s]")


def _row(f: FourierField) -> np.ndarray:
    return np.concatenate([[f.a0], f.a, f.b])


def test_criterion_01_parseval_roundtrip():
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst_norm, worst_rt = 0.0, 0.0
    for _ in range(200):
        M = int(rng.integers(1, 65))
        j = np.arange(1, M + 1, dtype=float)
        f = FourierField(float(rng.normal()),
                         rng.normal(size=M) / j,
                         rng.normal(size=M) / j)
        n = dealiased_grid_size(M)
        g = to_grid(f, n)
        norm_err = abs(l2_norm_sq(f) - float(np.mean(g.values ** 2)))
        worst_norm = max(worst_norm, norm_err / max(1.0, l2_norm_sq(f)))
        back = from_grid(g, M)
        rt = float(np.max(np.abs(_row(back) - _row(f))))
        worst_rt = max(worst_rt, rt / max(1.0, float(np.max(np.abs(_row(f))))))
    assert worst_norm <= 1e-12
    assert worst_rt <= 1e-12
    _report(1, "Parseval/round-trip",
            f"200 fields, norm err {worst_norm:.2e}, round trip {worst_rt:.2e}",
            t0, 5.0)


def _fd_gradient(V, coeffs, h=1e-6):
    g = np.empty_like(coeffs)
    for i in range(coeffs.size):
        cp, cm = coeffs.copy(), coeffs.copy()
        cp[i] += h
        cm[i] -= h
        g[i] = (V(cp) - V(cm)) / (2.0 * h)
    return g


def _fd_form(V, coeffs, direction, h=1e-4):
    vp = V(coeffs + h * direction)
    vm = V(coeffs - h * direction)
    return (vp - 2.0 * V(coeffs) + vm) / (h * h)


def test_criterion_02_gradient_hessian_fd():
    t0 = time.time()
    M = 16
    d = 2 * M + 1
    rng = np.random.default_rng(202)
    beta = 0.3
    scale = np.concatenate(([1.0], np.arange(1, M + 1, dtype=float),
                            np.arange(1, M + 1, dtype=float)))

    def run_model(model, dim, to_point, V, grad_fn):
        worst_g, worst_h = 0.0, 0.0
        for _ in range(20):
            c = rng.normal(size=dim) * 0.2
            nrm = float(np.sum(c * c))
            if nrm > 1.0:
                c *= 0.99 / math.sqrt(nrm)
            analytic = grad_fn(to_point(c), beta)
            fd = _fd_gradient(lambda x: V(to_point(x), beta), c)
            gerr = float(np.max(np.abs(analytic - fd)))
            worst_g = max(worst_g, gerr / max(1.0, float(np.max(np.abs(analytic)))))
            xi = rng.normal(size=dim)
            xi /= np.linalg.norm(xi)
            form = scaled_hessian_form(to_point(c), beta, xi, model=model)
            dvec = xi / (scale if model != "nls" else np.tile(scale, 2))
            fd_form = _fd_form(lambda x: V(to_point(x), beta), c, dvec)
            worst_h = max(worst_h, abs(form - fd_form) / max(1.0, abs(form)))
        return worst_g, worst_h

    def real_point(c):
        return FourierField(c[0], c[1:M + 1], c[M + 1:])

    def nls_point(c):
        return NlsField(real_point(c[:d]), real_point(c[d:]))

    results = {
        "kdv": run_model("kdv", d, real_point, gibbs_potential, gibbs_potential_grad),
        "mkdv": run_model("mkdv", d, real_point, mkdv_potential, mkdv_potential_grad),
        "nls": run_model("nls", 2 * d, nls_point, nls_potential, nls_potential_grad),
    }
    for model, (gerr, herr) in results.items():
        assert gerr <= 1e-5, model
        assert herr <= 1e-5, model
    detail = ", ".join(f"{m} grad {g:.1e}/form {h:.1e}"
                       for m, (g, h) in results.items())
    _report(2, "gradient/Hessian FD", detail, t0, 30.0)


def test_criterion_03_small_coupling_certificate():
    t0 = time.time()
    cert = certify_convexity("kdv", BETA_SMALL, 1.0, 32,
                             n_points=100, n_directions=20, seed=11)
    assert cert.sampled_min_form >= 0.5 - 1e-9
    assert cert.passed and cert.alpha == 0.5
    _report(3, "small-coupling certificate",
            f"min form {cert.sampled_min_form:.6f} >= 0.5, alpha {cert.alpha}",
            t0, 60.0)


def test_criterion_04_quartic_and_schroedinger_certificates():
    t0 = time.time()
    c_mkdv = certify_convexity("mkdv", 0.25, 1.0, 32,
                               n_points=100, n_directions=20, seed=12)
    c_nls = certify_convexity("nls", 0.45, 1.0, 32,
                              n_points=100, n_directions=20, seed=13)
    for cert in (c_mkdv, c_nls):
        assert cert.sampled_min_form >= 0.5
        assert cert.passed and cert.alpha == 0.5
    _report(4, "quartic/Schroedinger certificates",
            f"mkdv min {c_mkdv.sampled_min_form:.6f}, "
            f"nls min {c_nls.sampled_min_form:.6f}", t0, 60.0)


def test_criterion_05_constant_stationary_points():
    t0 = time.time()
    worst = 0.0
    for beta, N in ((1.0, 1.0), (2.5, 4.0), (0.7, 2.25)):
        lo, hi = classify_constant_points(beta, N)
        ref = beta * N ** 1.5 / 12.0
        tol = 1e-12 * max(1.0, ref)
        assert lo["phi"] == -math.sqrt(N) and hi["phi"] == math.sqrt(N)
        errs = [abs(lo["lambda"] - beta * math.sqrt(N) / 2.0),
                abs(lo["energy"] + ref),
                abs(hi["lambda"] + beta * math.sqrt(N)),
                abs(hi["energy"] - ref)]
        assert max(errs) <= tol
        assert lo["local_min"] is True and hi["local_min"] is False
        worst = max(worst, max(errs))
    _report(5, "constant stationary points",
            f"3 parameter pairs, worst error {worst:.2e}", t0, 1.0)


def test_criterion_06_cnoidal_families():
    t0 = time.time()
    families = ([(1.0, lam, 1) for lam in (-1.5, -2.0, -2.5, -3.0, -3.5, -4.0)]
                + [(1.0, lam, 2) for lam in (-5.0, -6.0, -7.0, -8.0)])
    worst = dict(st=0.0, fi=0.0, rc=0.0, pr=0.0)
    for beta, lam, m in families:
        w = solve_periodic_family(beta, lam, m)
        assert w is not None, (beta, lam, m)
        prof = cnoidal_profile(w, 1024)
        worst["st"] = max(worst["st"], stationarity_residual(prof, beta, lam))
        worst["fi"] = max(worst["fi"], float(np.max(np.abs(
            first_integral_values(prof, beta, lam) - w.C))))
        worst["rc"] = max(worst["rc"], w.roots.cubic_residual(beta, lam, w.C))
        worst["pr"] = max(worst["pr"], w.periodicity_residual)
    assert worst["st"] <= 1e-8
    assert worst["fi"] <= 1e-8
    assert worst["rc"] <= 1e-10
    assert worst["pr"] <= 1e-10
    _report(6, "cnoidal families",
            f"10 families: stationarity {worst['st']:.1e}, first integral "
            f"{worst['fi']:.1e}, roots {worst['rc']:.1e}, period {worst['pr']:.1e}",
            t0, 60.0)


def test_criterion_07_elliptic_closed_forms():
    t0 = time.time()
    assert abs(complete_elliptic_k(0.0) - math.pi / 2.0) <= 1e-14

    x = np.linspace(-10.0, 10.0, 1000)
    sn0_err = float(np.max(np.abs(jacobi_sn(x, 0.0) - np.sin(x))))
    assert sn0_err <= 1e-12

    snK_err = 0.0
    for k in np.arange(0.1, 0.95, 0.1):
        K = complete_elliptic_k(float(k))
        snK_err = max(snK_err, abs(float(jacobi_sn(K, float(k))) - 1.0))
    assert snK_err <= 1e-12

    k = 1.0 / math.sqrt(2.0)
    K_quad, _ = scipy_quad(
        lambda th: 1.0 / math.sqrt(1.0 - k * k * math.sin(th) ** 2),
        0.0, math.pi / 2.0, epsabs=1e-14, epsrel=1e-14)
    kq_err = abs(complete_elliptic_k(k) - K_quad)
    assert kq_err <= 1e-12
    _report(7, "elliptic closed forms",
            f"sn|0 {sn0_err:.1e}, sn(K|k) {snK_err:.1e}, "
            f"K(1/sqrt2) vs quadrature {kq_err:.1e}", t0, 5.0)


def test_criterion_08_floquet_zero_potential_and_lame_counts():
    t0 = time.time()
    zero = np.zeros(64)
    trace_err = 0.0
    for lam in (0.03, 0.2, 0.7, 1.3, 2.6, 5.0, 9.7, 16.0):
        ref = 2.0 * math.cos(2.0 * math.pi * math.sqrt(lam))
        trace_err = max(trace_err, abs(floquet_trace(zero, lam) - ref))
    assert trace_err <= 1e-9

    res0 = instability_intervals(zero, 1.0, (-0.5, 1.5), scan_points=400)
    assert abs(res0.lambda0) <= 1e-8

    counts = {}
    for lam_idx, ell, hi in ((-0.5, 1, 4.0), (-1.5, 2, 8.0)):
        mod, _, _ = modulus_with_index(1.0, lam_idx, float(ell))
        q, period = standard_lame_potential(ell, mod.k)
        res = instability_intervals(q, 1.0, (-3.0, hi), scan_points=1200,
                                    period=period)
        counts[ell] = len(res.unstable_intervals)
        assert counts[ell] == ell + 1, (ell, res.unstable_intervals)
    _report(8, "Floquet/finite-band potentials",
            f"zero-potential trace err {trace_err:.1e}, lambda0 "
            f"{res0.lambda0:.1e}, interval counts {counts}", t0, 120.0)


def test_criterion_09_second_variation_flips_at_band_edge():
    t0 = time.time()
    points = [(1.0, -1.5, 1, (-6.0, 2.0)), (1.0, -2.0, 1, (-8.0, 2.0)),
              (1.0, -3.0, 1, (-16.0, 2.0)), (2.0, -2.5, 1, (-12.0, 2.0)),
              (1.0, -5.0, 2, (-12.0, 2.0))]
    lam0s = []
    for beta, lam, m, rng in points:
        w = solve_periodic_family(beta, lam, m)
        prof = cnoidal_profile(w, 512)
        lam0 = instability_intervals(prof, beta, rng, scan_points=600).lambda0
        below = hamel_min_check(prof, beta, lam0 - 1e-4)
        above = hamel_min_check(prof, beta, lam0 + 1e-4)
        assert below["min_eig"] > 0.0 and below["is_local_min"], (beta, lam, m)
        assert above["min_eig"] < 0.0 and not above["is_local_min"], (beta, lam, m)
        lam0s.append(lam0)
    _report(9, "second-variation sign flip",
            "5 waves flip at lambda0 within 1e-4; lambda0 = "
            + ", ".join(f"{v:.4f}" for v in lam0s), t0, 120.0)


def test_criterion_10_traveling_wave_speed():
    t0 = time.time()
    wave = solve_periodic_family(1.0, -1.5, 1)
    out = traveling_wave_check(wave, FlowConfig("kdv", 1.0, 1e-5, 0.1, 64, 512))
    cell = 2.0 * math.pi / 512
    speed_err = abs(out["speed"] - 1.5)
    assert not out["degenerate"]
    assert speed_err <= cell
    assert out["shape_error"] <= 1e-6
    _report(10, "traveling wave",
            f"speed 1.5 hit to {speed_err:.1e} (cell {cell:.1e}), "
            f"shape {out['shape_error']:.1e}", t0, 60.0)


def test_criterion_11_conservation_and_reversibility():
    t0 = time.time()
    a = np.zeros(32)
    b = np.zeros(32)
    a[0], a[2] = 0.7, 0.3
    b[1], b[3] = 0.5, 0.2
    u0 = FourierField(0.0, a, b)
    n = dealiased_grid_size(32)
    cfg = FlowConfig("kdv", 1.0, 1e-4, 1.0, 32, n, save_every=1000)
    res = evolve(u0, cfg)
    back = evolve(reverse_state(res.final, "kdv"), cfg).final
    undone = reverse_state(back, "kdv")
    rev = float(np.max(np.abs(_row(undone) - _row(u0))))
    assert res.report.l2_drift <= 1e-8
    assert res.report.energy_drift <= 1e-6
    assert rev <= 1e-7
    _report(11, "conservation/reversibility",
            f"l2 drift {res.report.l2_drift:.1e}, energy drift "
            f"{res.report.energy_drift:.1e}, reversal {rev:.1e}", t0, 60.0)


def test_criterion_12_sampler_ground_truth():
    t0 = time.time()
    batch = sample_gibbs(EnsembleParams("kdv", 1.0, 1.0, 1), 100000,
                         seed=17, method="rejection")
    x = batch.coeffs
    nodes, lw = ball_quadrature(3, 1.0, 128, 128)
    quad = 0.5 * np.sum((nodes / loop_scales(1)) ** 2, axis=1)
    rho_w = np.exp(log_interaction_weight("kdv", nodes, 1, 1.0) - quad) * lw
    Z = float(rho_w.sum())

    def qmean(vals):
        return float(np.dot(vals, rho_w)) / Z

    pairs = [
        ((x[:, 0] ** 2).mean(), qmean(nodes[:, 0] ** 2)),
        ((x[:, 1] ** 2).mean(), qmean(nodes[:, 1] ** 2)),
        ((x[:, 2] ** 2).mean(), qmean(nodes[:, 2] ** 2)),
        ((x ** 2).sum(axis=1).mean(), qmean(np.sum(nodes ** 2, axis=1))),
    ]
    moment_rel = max(abs(mc - qd) / abs(qd) for mc, qd in pairs)
    assert moment_rel <= 0.02

    free = sample_gibbs(EnsembleParams("kdv", 0.0, 1.0, 1), 100000, seed=23)
    rng = np.random.default_rng(99)
    kept = []
    while sum(len(k) for k in kept) < 100000:
        cand = np.column_stack([
            rng.normal(0.0, 1.0, 200000),
            rng.normal(0.0, math.sqrt(0.5), 200000),
            rng.normal(0.0, math.sqrt(0.5), 200000)])
        kept.append(cand[np.sum(cand ** 2, axis=1) <= 1.0])
    oracle = np.concatenate(kept)[:100000]
    ks_worst = 0.0
    for mc_col, or_col in ((free.coeffs[:, 0], oracle[:, 0]),
                           (free.coeffs[:, 1], oracle[:, 1]),
                           (np.sum(free.coeffs ** 2, axis=1),
                            np.sum(oracle ** 2, axis=1))):
        ks_worst = max(ks_worst, float(
            ks_2samp(mc_col, or_col, method="asymp").statistic))
    assert ks_worst <= 0.02
    _report(12, "sampler ground truth",
            f"second moments within {moment_rel:.2%} of quadrature, "
            f"free-case KS {ks_worst:.4f}", t0, 120.0)


def test_criterion_13_concentration_of_linear_observable():
    t0 = time.time()
    params = EnsembleParams("kdv", BETA_SMALL, 1.0, 8)
    batch = sample_gibbs(params, 100000, seed=31, method="rejection")
    g = FourierField(0.0, np.array([1.0] + [0.0] * 7), np.zeros(8))
    t_grid = np.linspace(-2.0, 2.0, 21)
    rep = empirical_mgf(batch, inner_observable(g), t_grid,
                        alpha=0.5, n_boot=200, seed=7)
    assert np.all(rep.log_mgf <= rep.bound + rep.ci_halfwidth)
    assert rep.passed
    margin = float(np.min(rep.bound + rep.ci_halfwidth - rep.log_mgf)[()])
    peak = float(np.max(rep.log_mgf))
    _report(13, "sub-Gaussian MGF envelope",
            f"21 t-values below t^2 + CI, peak log MGF {peak:.4f}, "
            f"min slack {margin:.1e}", t0, 180.0)


def test_criterion_14_low_dimensional_entropy_ratio():
    t0 = time.time()
    out = entropy_dirichlet_lowdim(BETA_SMALL, 1.0, 1, grid_resolution=128)
    max_ratio = max(r for _, _, r in out)
    assert max_ratio <= 4.0 * 1.01
    _report(14, "low-dimensional entropy ratio",
            f"max entropy/Dirichlet ratio {max_ratio:.4f} <= 4.04", t0, 120.0)


def test_criterion_15_invariance_of_weighted_ensemble():
    t0 = time.time()
    params = EnsembleParams("kdv", BETA_SMALL, 1.0, 16)
    out = invariance_experiment(params, T=1.0, n_samples=2000, seed=5, dt=1e-3)
    assert out["all_passed"] is True
    stats = {k: v["statistic"] for k, v in out["observables"].items()}
    assert all(s <= out["threshold"] for s in stats.values())
    detail = ", ".join(f"{k} {v:.4f}" for k, v in stats.items())
    _report(15, "flow invariance",
            f"KS {detail} all below {out['threshold']:.4f}", t0, 600.0)
