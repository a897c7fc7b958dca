"""Cnoidal stationary points of the constrained KdV energy.

Stationary points of H_lambda = H - lambda/2 ||phi||^2 solve

    phi'' + (beta/2) phi^2 + lambda phi = 0,                    (*)

whose first integral is

    1/2 phi'^2 + (beta/6) phi^3 + (lambda/2) phi^2 = C.

Writing the right side as -(beta/6)(phi - f1)(phi - f2)(phi - f3) forces
the elementary symmetric functions of the roots to satisfy

    f1 + f2 + f3 = -3 lambda / beta,
    f1 f2 + f1 f3 + f2 f3 = 0,
    f1 f2 f3 = 6 C / beta.

Equivalently z = 1/phi solves the depressed cubic
z^3 - (lambda/(2C)) z - beta/(6C) = 0 with discriminant combination

    D = -lambda^3 / (216 C^3) + beta^2 / (144 C^2);

D < 0 is the regime of three distinct real roots, where the trigonometric
root formula applies and the orbit of (*) between f2 and f1 is the
cnoidal wave

    phi(x) = f1 - (f1 - f2) sn( sqrt(beta (f1-f3) / 12) (x - x1) | k )^2,
    k^2 = (f1 - f2) / (f1 - f3).

The wave closes up on the circle with m crests exactly when

    2 pi sqrt(beta (f1 - f3) / 12) = 2 m K(k),

and `solve_periodic_family` tunes the first-integral constant C to that
condition.  A Lame-type index ell is attached to each wave through
k^2 ell(ell+1) = beta (f1 - f3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .elliptic import complete_elliptic_k, jacobi_sn
from .fields import FourierField, GridField, from_grid, grid_points, to_grid
from .hamiltonians import constrained_energy

__all__ = [
    "CubicRoots",
    "EllipticModulus",
    "CnoidalParams",
    "cubic_roots_trig",
    "modulus_from_roots",
    "modulus_identity_rhs",
    "modulus_with_index",
    "cnoidal_profile",
    "stationarity_residual",
    "first_integral_values",
    "solve_periodic_family",
    "solve_on_sphere",
    "classify_constant_points",
    "second_variation_form",
]


@dataclass(frozen=True)
class CubicRoots:
    """Roots f1 >= f2 >= f3 of the stationary cubic, with the discriminant
    data (disc, r, theta) of the reciprocal depressed cubic."""

    f1: float
    f2: float
    f3: float
    disc: float
    r: float
    theta: float
    all_real: bool

    def as_array(self) -> np.ndarray:
        return np.array([self.f1, self.f2, self.f3])

    @property
    def gamma(self) -> float:
        """cos(theta/3) for the polar angle theta of the root construction."""
        return float(np.cos(self.theta / 3.0))

    def cubic_residual(self, beta: float, lam: float, C: float) -> float:
        """Max residual of -(beta/6) f^3 - (lambda/2) f^2 + C at the roots."""
        f = self.as_array()
        return float(np.max(np.abs(-(beta / 6.0) * f ** 3 - 0.5 * lam * f * f + C)))


@dataclass(frozen=True)
class EllipticModulus:
    k: float

    def __post_init__(self):
        if not (0.0 <= self.k < 1.0):
            raise ValueError("modulus must lie in [0, 1)")

    @property
    def ksq(self) -> float:
        return self.k * self.k


@dataclass(frozen=True)
class CnoidalParams:
    """Everything defining one cnoidal stationary wave."""

    beta: float
    lam: float
    C: float
    roots: CubicRoots
    k: float
    ell: float
    m: int
    x1: float = 0.0

    @property
    def arg_scale(self) -> float:
        """sqrt(beta (f1 - f3) / 12), the x-scale inside sn."""
        return float(np.sqrt(self.beta * (self.roots.f1 - self.roots.f3) / 12.0))

    @property
    def periodicity_residual(self) -> float:
        return abs(2.0 * np.pi * self.arg_scale - 2.0 * self.m * complete_elliptic_k(self.k))

    def to_json_dict(self) -> dict:
        return {
            "beta": self.beta,
            "lambda": self.lam,
            "C": self.C,
            "roots": [self.roots.f1, self.roots.f2, self.roots.f3],
            "discriminant": self.roots.disc,
            "k": self.k,
            "ksq": self.k * self.k,
            "ell": self.ell,
            "m": self.m,
            "x1": self.x1,
            "gamma": self.roots.gamma,
            "periodicity_residual": self.periodicity_residual,
        }


def cubic_roots_trig(beta: float, lam: float, C: float) -> CubicRoots:
    """Solve the stationary cubic by the trigonometric formula.

    Requires beta > 0 and C != 0.  When the discriminant combination D is
    negative there are three distinct real roots 1/z_i with

        z_i = 2 r^{1/3} cos((theta + 2 pi i) / 3),   i = 0, 1, 2,

    where r e^{i theta} = beta/(12C) + i sqrt(-D).  For D >= 0 only one
    real root exists; it is reported in f1 with f2 = f3 = nan.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if C == 0.0:
        raise ValueError("C must be nonzero (constant solutions are handled separately)")
    disc = -lam ** 3 / (216.0 * C ** 3) + beta ** 2 / (144.0 * C ** 2)
    re = beta / (12.0 * C)
    if disc < 0.0:
        im = np.sqrt(-disc)
        r = float(np.hypot(re, im))
        theta = float(np.arctan2(im, re))
        z = 2.0 * r ** (1.0 / 3.0) * np.cos((theta + 2.0 * np.pi * np.arange(3)) / 3.0)
        f = np.sort(1.0 / z)[::-1]
        return CubicRoots(float(f[0]), float(f[1]), float(f[2]), float(disc), r, theta, True)
    # single real root; fall back to the companion cubic in phi itself
    poly = np.roots([1.0, 3.0 * lam / beta, 0.0, -6.0 * C / beta])
    real = poly[np.abs(poly.imag) < 1e-9 * np.max(np.abs(poly))].real
    f1 = float(real[0]) if len(real) else float("nan")
    return CubicRoots(f1, float("nan"), float("nan"), float(disc), float("nan"), float("nan"), False)


def modulus_from_roots(roots: CubicRoots, beta: float) -> tuple[EllipticModulus, float]:
    """Modulus k^2 = (f1-f2)/(f1-f3) and index ell with k^2 ell(ell+1) = beta (f1-f3).

    Degenerate root pairs (k = 0 or k = 1) are rejected.
    """
    if not roots.all_real:
        raise ValueError("need three real roots")
    span = roots.f1 - roots.f3
    gap = roots.f1 - roots.f2
    if span <= 0.0:
        raise ValueError("roots must not be all equal")
    ksq = gap / span
    if not (0.0 < ksq < 1.0):
        raise ValueError("repeated roots give a degenerate modulus")
    q = beta * span / ksq
    ell = 0.5 * (-1.0 + np.sqrt(1.0 + 4.0 * q))
    return EllipticModulus(float(np.sqrt(ksq))), float(ell)


def modulus_identity_rhs(gamma: float) -> float:
    """Algebraic expression linking gamma = cos(theta/3) to the modulus.

    Evaluates 2g sqrt(1-g^2) / (sqrt(3)/2 - sqrt(3) g^2 - g sqrt(1-g^2)).
    On three-real-root inputs this comes out numerically equal to -1/k^2
    rather than k^2; tests record the reconciliation instead of enforcing
    the expression at face value.
    """
    s = np.sqrt(1.0 - gamma * gamma)
    den = np.sqrt(3.0) / 2.0 - np.sqrt(3.0) * gamma * gamma - gamma * s
    return float(2.0 * gamma * s / den)


def modulus_with_index(beta: float, lam: float, ell_target: float,
                       n_scan: int = 400) -> tuple[EllipticModulus, CubicRoots, float]:
    """Root set whose modulus satisfies k^2 ell(ell+1) = beta (f1 - f3)
    with a prescribed index ell.

    Scans the admissible first-integral constants C between 0 and
    2 lam^3 / (3 beta^2); the index runs from the solution of
    ell(ell+1) = -3 lam at the C -> 0- end up to infinity at the other,
    so any target above the lower endpoint is reachable.  The orbit found
    this way generally does not close up on the circle; its only use is
    to supply the modulus for a standard sn^2 potential.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if lam >= 0.0:
        raise ValueError("three real roots require lam < 0")
    floor_idx = 0.5 * (-1.0 + np.sqrt(1.0 - 12.0 * lam))
    if ell_target <= floor_idx:
        raise ValueError(
            f"index target {ell_target} not reachable: needs > {floor_idx:.6f} "
            "for this lam (raise lam toward 0)")
    c_bound = 2.0 * lam ** 3 / (3.0 * beta * beta)

    def index_gap(u: float) -> float:
        roots = cubic_roots_trig(beta, lam, u * c_bound)
        _, ell = modulus_from_roots(roots, beta)
        return ell - ell_target

    us = np.concatenate([np.geomspace(1e-12, 0.5, n_scan // 2),
                         1.0 - np.geomspace(1e-10, 0.5, n_scan // 2)[::-1]])
    vals = np.array([index_gap(u) for u in us])
    hit = np.nonzero(vals[:-1] * vals[1:] < 0.0)[0]
    if len(hit) == 0:
        raise RuntimeError("no index crossing found in the admissible C range")
    i = hit[0]
    u_star = brentq(index_gap, us[i], us[i + 1], xtol=1e-15, rtol=8.9e-16)
    C = float(u_star * c_bound)
    roots = cubic_roots_trig(beta, lam, C)
    mod, _ = modulus_from_roots(roots, beta)
    return mod, roots, C


def cnoidal_profile(params: CnoidalParams, n: int, tol: float = 1e-8) -> GridField:
    """Sample the wave on the n-point circle grid.

    Refuses parameters whose wave does not close up on 2 pi to within tol,
    since sampling a non-periodic orbit on the circle grid is meaningless.
    """
    if params.periodicity_residual > tol:
        raise ValueError(
            f"wave is not 2pi-periodic (residual {params.periodicity_residual:.3e})"
        )
    x = grid_points(n)
    s = jacobi_sn(params.arg_scale * (x - params.x1), params.k)
    f1, f2 = params.roots.f1, params.roots.f2
    return GridField(f1 - (f1 - f2) * s * s)


def stationarity_residual(phi, beta: float, lam: float) -> float:
    """Sup norm of phi'' + (beta/2) phi^2 + lambda phi on the grid.

    Accepts a GridField (second derivative taken spectrally) or a
    FourierField (sampled on its dealiased grid first).
    """
    if isinstance(phi, FourierField):
        phi = to_grid(phi, max(512, 4 * phi.M + 4))
    n = phi.n
    f = from_grid(phi, n // 2 - 1)
    k = np.arange(1, f.M + 1, dtype=float)
    fxx = FourierField(0.0, -(k ** 2) * f.a, -(k ** 2) * f.b)
    vals = phi.values
    return float(np.max(np.abs(to_grid(fxx, n).values + 0.5 * beta * vals * vals + lam * vals)))


def first_integral_values(phi: GridField, beta: float, lam: float) -> np.ndarray:
    """Grid values of 1/2 phi'^2 + beta/6 phi^3 + lambda/2 phi^2.

    Flat (constant equal to C) exactly on stationary orbits.
    """
    n = phi.n
    f = from_grid(phi, n // 2 - 1)
    k = np.arange(1, f.M + 1, dtype=float)
    fx = FourierField(0.0, k * f.b, -k * f.a)
    dphi = to_grid(fx, n).values
    v = phi.values
    return 0.5 * dphi * dphi + beta / 6.0 * v ** 3 + 0.5 * lam * v * v


def _period_gap(beta: float, lam: float, m: int, C: float) -> float:
    roots = cubic_roots_trig(beta, lam, C)
    if not roots.all_real:
        return float("nan")
    try:
        mod, _ = modulus_from_roots(roots, beta)
    except ValueError:
        return float("nan")
    alpha = np.sqrt(beta * (roots.f1 - roots.f3) / 12.0)
    return 2.0 * np.pi * alpha - 2.0 * m * complete_elliptic_k(mod.k)


def solve_periodic_family(beta: float, lam: float, m: int) -> CnoidalParams | None:
    """Tune C so the wave with multiplier lambda closes up with m crests.

    The admissible C interval is bounded by 2 lambda^3 / (3 beta^2) (where
    two roots collide, k -> 0) and 0 (where k -> 1 and the period
    diverges).  Returns None when no sign change of the periodicity gap is
    found in that interval.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if m < 1:
        raise ValueError("m must be a positive integer")
    if lam == 0.0:
        return None
    c_bound = 2.0 * lam ** 3 / (3.0 * beta ** 2)

    # u parametrizes C = u * c_bound, u in (0, 1); u -> 1 is the k -> 0 end
    us = np.unique(np.concatenate([
        np.geomspace(1e-12, 0.5, 200),
        1.0 - np.geomspace(1e-10, 0.5, 200),
    ]))
    gaps = np.array([_period_gap(beta, lam, m, u * c_bound) for u in us])
    ok = np.isfinite(gaps)
    us, gaps = us[ok], gaps[ok]
    hit = np.nonzero(np.sign(gaps[:-1]) * np.sign(gaps[1:]) < 0)[0]
    if len(hit) == 0:
        return None
    i = hit[-1]  # the crossing nearest the k -> 0 end
    # solve in log u: near the k -> 1 end the gap varies like log u, so a
    # root in u itself is ill-conditioned while t = log u stays O(1)
    t_star = brentq(lambda t: _period_gap(beta, lam, m, np.exp(t) * c_bound),
                    np.log(us[i]), np.log(us[i + 1]),
                    xtol=1e-14, rtol=8.9e-16, maxiter=200)
    C = np.exp(t_star) * c_bound
    roots = cubic_roots_trig(beta, lam, C)
    mod, ell = modulus_from_roots(roots, beta)
    wave = CnoidalParams(beta=beta, lam=lam, C=float(C), roots=roots,
                         k=mod.k, ell=ell, m=m)
    if wave.periodicity_residual > 1e-9:
        return None
    return wave


def solve_on_sphere(beta: float, N: float, m: int,
                    lam_lo: float, lam_hi: float,
                    scan: int = 60) -> CnoidalParams | None:
    """Root-find lambda in [lam_lo, lam_hi] so the m-crest wave has
    squared L2 norm N.  Scans first, then bisects the bracketing pair."""

    def norm_gap(lam: float) -> float:
        p = solve_periodic_family(beta, lam, m)
        if p is None:
            return float("nan")
        g = cnoidal_profile(p, 1024)
        return float(np.mean(g.values ** 2)) - N

    lams = np.linspace(lam_lo, lam_hi, scan)
    gaps = np.array([norm_gap(l) for l in lams])
    ok = np.isfinite(gaps)
    lams, gaps = lams[ok], gaps[ok]
    if len(lams) < 2:
        return None
    hit = np.nonzero(np.sign(gaps[:-1]) * np.sign(gaps[1:]) < 0)[0]
    if len(hit) == 0:
        return None
    lam_star = brentq(norm_gap, lams[hit[0]], lams[hit[0] + 1], xtol=1e-12, rtol=8.9e-16)
    return solve_periodic_family(beta, lam_star, m)


def second_variation_form(phi, beta: float, lam: float, psi: FourierField) -> float:
    """Quadratic form int (psi'^2 - (lambda + beta phi) psi^2) dx/2pi.

    This is twice the second-order coefficient in the expansion of the
    constrained energy H_lambda(phi + t psi) around a stationary phi.
    """
    if isinstance(phi, FourierField):
        mphi = phi.M
        phi_field = phi
    else:
        mphi = phi.n // 2 - 1
        phi_field = from_grid(phi, mphi)
    n = 4
    while n < mphi + 2 * psi.M + 2:
        n *= 2
    pv = to_grid(phi_field, n).values
    k = np.arange(1, psi.M + 1, dtype=float)
    dpsi = FourierField(0.0, k * psi.b, -k * psi.a)
    psig = to_grid(psi, n).values
    dpsig = to_grid(dpsi, n).values
    return float(np.mean(dpsig * dpsig - (lam + beta * pv) * psig * psig))


def classify_constant_points(beta: float, N: float) -> list[dict]:
    """The two constant points on the sphere ||phi||^2 = N.

    The Euler-Lagrange multiplier of a constant c is -beta c / 2, and the
    constrained energy at that multiplier is -beta c^3 / 12.  The negative
    constant is a genuine local minimum.  The positive constant is
    conventionally quoted with multiplier -beta sqrt(N); its energy value
    +beta N^{3/2} / 12 is the one belonging to the Euler-Lagrange
    multiplier -beta sqrt(N) / 2, and its second variation is not
    positive, so it is not a local minimum.
    """
    out = []
    for c, lam_reported in ((-np.sqrt(N), beta * np.sqrt(N) / 2.0),
                            (np.sqrt(N), -beta * np.sqrt(N))):
        lam_stat = -beta * c / 2.0
        phi = FourierField(c, np.zeros(1), np.zeros(1))
        energy = constrained_energy(phi, beta, lam_stat)
        # second variation against the lowest basis directions at the
        # Euler-Lagrange multiplier: min over {1, sqrt2 cos x, sqrt2 sin x}
        min_form = min(
            second_variation_form(phi, beta, lam_stat, FourierField(1.0, np.zeros(1), np.zeros(1))),
            second_variation_form(phi, beta, lam_stat, FourierField(0.0, np.array([1.0]), np.zeros(1))),
        )
        out.append({
            "phi": float(c),
            "lambda": float(lam_reported),
            "lambda_stationary": float(lam_stat),
            "energy": float(energy),
            "local_min": bool(min_form > 1e-10),
        })
    return out
