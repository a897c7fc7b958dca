"""Concentration-of-measure checks for the ball-restricted Gibbs samples.

Two complementary diagnostics.  The moment-generating-function route
takes a sample batch and a 1-Lipschitz observable F, centers it, and
compares log E exp(t F) against the sub-Gaussian envelope t^2/(2 alpha)
implied by a log-Sobolev constant alpha, with bootstrap confidence bands
covering both Monte Carlo noise and the empirical-centering bias.  The
low-dimensional route evaluates the entropy and the weighted Dirichlet
form of explicit polynomial test functions by direct polar quadrature of
the density, so the inequality itself can be inspected without sampling
error; the Dirichlet form scales the coordinate gradient by 1 on the
mean and 1/j on mode j, matching the metric in which the convexity
certificates are stated (the harder direction of the comparison).
"""

from __future__ import annotations

from dataclasses import dataclass
import json
import math

import numpy as np
from scipy.special import logsumexp, xlogy

from .fields import FourierField, l2_norm_sq
from .sampling import SampleBatch, log_interaction_weight, loop_scales

__all__ = [
    "MGFReport",
    "norm_observable",
    "inner_observable",
    "distance_observable",
    "empirical_mgf",
    "herbst_bound_check",
    "PolyObservable",
    "default_polynomial_family",
    "ball_quadrature",
    "entropy_dirichlet_lowdim",
]


def _aligned_coeffs(g: FourierField, M: int) -> np.ndarray:
    """Coefficient row of g in the layout of a truncation-M batch."""
    if g.M > M and (np.any(g.a[M:] != 0.0) or np.any(g.b[M:] != 0.0)):
        raise ValueError("observable field has modes beyond the batch truncation")
    m = min(g.M, M)
    row = np.zeros(2 * M + 1)
    row[0] = g.a0
    row[1:1 + m] = g.a[:m]
    row[1 + M:1 + M + m] = g.b[:m]
    return row


def norm_observable():
    """F(phi) = ||phi||_{L2}; 1-Lipschitz by the reverse triangle inequality."""
    def F(batch: SampleBatch) -> np.ndarray:
        return np.sqrt(batch.norms_sq())
    F.name = "norm"
    return F


def inner_observable(g: FourierField):
    """F(phi) = <phi, g> with ||g|| <= 1, so F is 1-Lipschitz."""
    if l2_norm_sq(g) > 1.0 + 1e-12:
        raise ValueError("pairing field must have L2 norm at most one")

    def F(batch: SampleBatch) -> np.ndarray:
        row = _aligned_coeffs(g, batch.params.M)
        return batch.coeffs @ row
    F.name = "inner"
    return F


def distance_observable(g0: FourierField):
    """F(phi) = ||phi - g0||; 1-Lipschitz for any fixed center g0."""
    def F(batch: SampleBatch) -> np.ndarray:
        row = _aligned_coeffs(g0, batch.params.M)
        diff = batch.coeffs - row
        return np.sqrt(np.sum(diff * diff, axis=1))
    F.name = "distance"
    return F


@dataclass(frozen=True)
class MGFReport:
    t_grid: np.ndarray
    log_mgf: np.ndarray
    ci_halfwidth: np.ndarray
    alpha: float
    bound: np.ndarray
    passed: bool

    def to_json_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "passed": bool(self.passed),
            "t_grid": [float(t) for t in self.t_grid],
            "log_mgf": [float(v) for v in self.log_mgf],
            "ci_halfwidth": [float(v) for v in self.ci_halfwidth],
            "bound": [float(v) for v in self.bound],
        }

    def dump_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,log_mgf,ci,bound\n")
            for t, v, c, b in zip(self.t_grid, self.log_mgf, self.ci_halfwidth, self.bound):
                fh.write(f"{float(t)!r},{float(v)!r},{float(c)!r},{float(b)!r}\n")


def _log_mgf_values(values: np.ndarray, t_grid: np.ndarray, logw: np.ndarray | None) -> np.ndarray:
    """log of the (weighted) empirical mean of exp(t (F - mean F)) per t."""
    if logw is None:
        centered = values - values.mean()
        arg = np.multiply.outer(t_grid, centered)
        return logsumexp(arg, axis=1) - math.log(values.size)
    lse = logsumexp(logw)
    w = np.exp(logw - lse)
    centered = values - np.dot(w, values)
    arg = np.multiply.outer(t_grid, centered) + logw
    return logsumexp(arg, axis=1) - lse


def empirical_mgf(batch: SampleBatch, F, t_grid, alpha: float = 0.5,
                  n_boot: int = 200, seed: int = 0) -> MGFReport:
    """Empirical log MGF of the centered observable with bootstrap bands.

    Centering is empirical (batch mean), and each bootstrap replicate
    re-centers itself, so the half-widths absorb the centering bias on
    top of Monte Carlo noise.  Importance batches are handled through
    their weights.
    """
    if len(batch) == 0:
        raise ValueError("empty batch")
    t_grid = np.asarray(t_grid, dtype=float)
    values = np.asarray(F(batch), dtype=float)
    logw = np.log(batch.weights) if batch.weights is not None else None
    log_mgf = _log_mgf_values(values, t_grid, logw)

    rng = np.random.default_rng(seed)
    n = values.size
    boots = np.empty((n_boot, t_grid.size))
    for b in range(n_boot):
        idx = rng.integers(0, n, n)
        boots[b] = _log_mgf_values(values[idx], t_grid,
                                   logw[idx] if logw is not None else None)
    lo, hi = np.percentile(boots, [2.5, 97.5], axis=0)
    ci = 0.5 * (hi - lo)

    bound = t_grid ** 2 / (2.0 * alpha)
    passed = bool(np.all(log_mgf <= bound + ci))
    return MGFReport(t_grid, log_mgf, ci, alpha, bound, passed)


def herbst_bound_check(report: MGFReport, alpha: float) -> bool:
    """True iff the empirical log MGF sits below t^2/(2 alpha) within CI."""
    bound = report.t_grid ** 2 / (2.0 * alpha)
    return bool(np.all(report.log_mgf <= bound + report.ci_halfwidth))


@dataclass(frozen=True)
class PolyObservable:
    """Differentiable test function given by value and gradient callables
    on coefficient rows (n, d)."""
    name: str
    func: object
    grad: object


def default_polynomial_family(M: int) -> list[PolyObservable]:
    """Low-degree polynomials in the first three coordinates."""
    if M < 1:
        raise ValueError("need at least one oscillating mode")
    d = 2 * M + 1

    def e(i):
        v = np.zeros(d)
        v[i] = 1.0
        return v

    fam = [
        PolyObservable("one", lambda x: np.ones(x.shape[0]),
                       lambda x: np.zeros_like(x)),
        PolyObservable("mean_coord", lambda x: x[:, 0],
                       lambda x: np.broadcast_to(e(0), x.shape)),
        PolyObservable("cos_coord", lambda x: x[:, 1],
                       lambda x: np.broadcast_to(e(1), x.shape)),
        PolyObservable("sin_coord", lambda x: x[:, 1 + M],
                       lambda x: np.broadcast_to(e(1 + M), x.shape)),
        PolyObservable("mean_sq", lambda x: x[:, 0] ** 2,
                       lambda x: 2.0 * x[:, [0]] * e(0)),
        PolyObservable("cross", lambda x: x[:, 1] * x[:, 1 + M],
                       lambda x: x[:, [1 + M]] * e(1) + x[:, [1]] * e(1 + M)),
        PolyObservable("shifted", lambda x: x[:, 0] + x[:, 1] ** 2,
                       lambda x: np.broadcast_to(e(0), x.shape) + 2.0 * x[:, [1]] * e(1)),
    ]
    return fam


def ball_quadrature(d: int, radius: float, n_r: int, n_ang: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and Lebesgue weights for the d-ball in hyperspherical form.

    Gauss-Legendre in the radius and each polar angle, uniform (spectral)
    in the azimuth; exact Jacobian r^(d-1) prod sin^(d-1-i) theta_i.
    """
    if d < 2:
        raise ValueError("dimension must be at least 2")
    r_x, r_w = np.polynomial.legendre.leggauss(n_r)
    r = 0.5 * radius * (r_x + 1.0)
    r_w = 0.5 * radius * r_w
    t_x, t_w = np.polynomial.legendre.leggauss(n_ang)
    theta = 0.5 * math.pi * (t_x + 1.0)
    t_w = 0.5 * math.pi * t_w
    n_phi = n_ang
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    p_w = np.full(n_phi, 2.0 * math.pi / n_phi)

    axes = [r] + [theta] * (d - 2) + [phi]
    wts = [r_w] + [t_w] * (d - 2) + [p_w]
    grids = np.meshgrid(*axes, indexing="ij")
    weight = np.ones(grids[0].shape)
    for i, w in enumerate(wts):
        shape = [1] * len(wts)
        shape[i] = -1
        weight = weight * w.reshape(shape)

    rr = grids[0]
    jac = rr ** (d - 1)
    coords = np.empty(rr.shape + (d,))
    sin_prod = np.ones(rr.shape)
    for i in range(d - 2):
        th = grids[1 + i]
        coords[..., i] = rr * sin_prod * np.cos(th)
        jac = jac * np.sin(th) ** (d - 2 - i)
        sin_prod = sin_prod * np.sin(th)
    az = grids[d - 1]
    coords[..., d - 2] = rr * sin_prod * np.cos(az)
    coords[..., d - 1] = rr * sin_prod * np.sin(az)
    return coords.reshape(-1, d), (weight * jac).ravel()


def _delta_multipliers(M: int) -> np.ndarray:
    j = np.arange(1, M + 1, dtype=float)
    return np.concatenate(([1.0], 1.0 / j, 1.0 / j))


def _entropy_dirichlet_at(beta, N, M, family, resolution, model):
    d = 2 * M + 1
    nodes, lw = ball_quadrature(d, math.sqrt(N), resolution, resolution)
    scales = loop_scales(M)
    quad = 0.5 * np.sum((nodes / scales) ** 2, axis=1)
    logrho = log_interaction_weight(model, nodes, M, beta) - quad
    rho_w = np.exp(logrho) * lw
    Z = float(rho_w.sum())
    mult = _delta_multipliers(M)
    out = []
    for obs in family:
        f = np.asarray(obs.func(nodes), dtype=float)
        g = np.asarray(obs.grad(nodes), dtype=float)
        f2 = f * f
        mean_f2 = float(np.dot(f2, rho_w)) / Z
        ent = float(np.dot(xlogy(f2, f2), rho_w)) / Z - float(xlogy(mean_f2, mean_f2))
        dirich = float(np.dot(np.sum((g * mult) ** 2, axis=1), rho_w)) / Z
        out.append((ent, dirich))
    return out


def entropy_dirichlet_lowdim(beta: float, N: float, M: int, family=None,
                             grid_resolution: int = 128, model: str = "kdv") -> list:
    """Entropy and scaled-gradient Dirichlet integrals by direct quadrature.

    Returns one (entropy, dirichlet, ratio) triple per test function,
    with ratio = 0 for functions of vanishing Dirichlet energy.  The
    computation is repeated at half resolution; more than 1% relative
    disagreement on any nonnegligible integral raises, since a coarse
    grid would silently understate the entropy.
    """
    if M > 2:
        raise ValueError("direct quadrature is limited to M <= 2")
    if grid_resolution < 16:
        raise ValueError("grid_resolution too small to trust")
    if family is None:
        family = default_polynomial_family(M)
    fine = _entropy_dirichlet_at(beta, N, M, family, grid_resolution, model)
    coarse = _entropy_dirichlet_at(beta, N, M, family, grid_resolution // 2, model)
    results = []
    for obs, (ent, dir_), (ent_c, dir_c) in zip(family, fine, coarse):
        for a, b in ((ent, ent_c), (dir_, dir_c)):
            size = max(abs(a), abs(b))
            if size > 1e-9 and abs(a - b) > 0.01 * size:
                raise ValueError(
                    f"resolution too coarse for {obs.name!r}: "
                    f"{a!r} vs {b!r} at half resolution")
        if ent < -1e-12:
            raise RuntimeError(f"negative entropy {ent!r} for {obs.name!r}")
        ratio = ent / dir_ if dir_ > 1e-14 else 0.0
        results.append((max(ent, 0.0), dir_, ratio))
    return results
