"""Energy functionals and Gibbs potentials for the three wave models.

All functionals integrate against dx/2pi.  The models are

    kdv    H = 1/2 int phi_x^2 - beta/6 int phi^3
    mkdv   H = 1/2 int phi_x^2 - beta/12 int phi^4
    nls    H = 1/2 int (P_x^2 + Q_x^2) + beta/4 int (P^2 + Q^2)^2

with beta > 0 throughout.  The constrained functional H_lambda subtracts
lambda/2 times the squared L2 norm; its stationary points on the sphere
are the cnoidal waves handled in `cnoidal`.

The Gibbs potential of the kdv ensemble, written in the unitary
coefficients (a0, a_k, b_k), is

    V = a0^2/2 + 1/2 sum_k k^2 (a_k^2 + b_k^2) - beta/6 int phi^3,

whose quadratic part is diagonal.  `gibbs_potential_tail` keeps the full
quadratic part but builds the cubic term from modes >= K+1 only; the sup
distance between the two decays like (2K+1)^{3/2} on L2 balls, which is
what makes the head/tail certificate of `convexity` work.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    FourierField,
    dealiased_grid_size,
    derivative,
    from_grid,
    l2_norm_sq,
    tail_field,
    to_grid,
)

__all__ = [
    "MODELS",
    "EnsembleParams",
    "NlsField",
    "kdv_energy",
    "mkdv_energy",
    "nls_energy",
    "constrained_energy",
    "gibbs_potential",
    "gibbs_potential_grad",
    "gibbs_potential_tail",
    "mkdv_potential",
    "mkdv_potential_grad",
    "nls_potential",
    "nls_potential_grad",
    "interaction",
    "interaction_upper_bound",
    "quadratic_coeff_weights",
]

MODELS = ("kdv", "mkdv", "nls")


@dataclass(frozen=True)
class EnsembleParams:
    """Parameters of a truncated Gibbs ensemble on the ball ||phi||^2 <= N."""

    model: str
    beta: float
    N: float
    M: int

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown model {self.model!r}")
        if not (self.beta >= 0.0 and np.isfinite(self.beta)):
            raise ValueError("beta must be finite and nonnegative")
        if not (self.N > 0.0 and np.isfinite(self.N)):
            raise ValueError("N must be positive")
        if self.M < 1:
            raise ValueError("M must be at least 1")


@dataclass(frozen=True)
class NlsField:
    """Pair of real fields (P, Q) sharing one truncation."""

    P: FourierField
    Q: FourierField

    def __post_init__(self):
        if self.P.M != self.Q.M:
            raise ValueError("P and Q must share the truncation")

    @property
    def M(self) -> int:
        return self.P.M

    def coeffs(self) -> np.ndarray:
        return np.concatenate([self.P.coeffs(), self.Q.coeffs()])

    @staticmethod
    def from_coeffs(c, M: int) -> "NlsField":
        c = np.asarray(c, dtype=float)
        d = 2 * M + 1
        if len(c) != 2 * d:
            raise ValueError("coefficient vector has wrong length")
        return NlsField(FourierField.from_coeffs(c[:d], M), FourierField.from_coeffs(c[d:], M))


def norm_sq(point) -> float:
    """Squared L2 norm of either a scalar field or an NLS pair."""
    if isinstance(point, NlsField):
        return l2_norm_sq(point.P) + l2_norm_sq(point.Q)
    return l2_norm_sq(point)


def _power_integral(f: FourierField, p: int) -> float:
    """int phi^p dx/2pi, exact for p <= 4 on the dealiased grid."""
    n = dealiased_grid_size(f.M)
    vals = to_grid(f, n).values
    return float(np.mean(vals ** p))


def kdv_energy(f: FourierField, beta: float) -> float:
    return 0.5 * l2_norm_sq(derivative(f)) - beta / 6.0 * _power_integral(f, 3)


def mkdv_energy(f: FourierField, beta: float) -> float:
    return 0.5 * l2_norm_sq(derivative(f)) - beta / 12.0 * _power_integral(f, 4)


def nls_energy(u: NlsField, beta: float) -> float:
    n = dealiased_grid_size(u.M)
    p = to_grid(u.P, n).values
    q = to_grid(u.Q, n).values
    quartic = float(np.mean((p * p + q * q) ** 2))
    return 0.5 * (l2_norm_sq(derivative(u.P)) + l2_norm_sq(derivative(u.Q))) + beta / 4.0 * quartic


def constrained_energy(point, beta: float, lam: float, model: str = "kdv") -> float:
    """H_lambda = H - lambda/2 ||.||^2 for the given model."""
    if model == "kdv":
        h = kdv_energy(point, beta)
    elif model == "mkdv":
        h = mkdv_energy(point, beta)
    elif model == "nls":
        h = nls_energy(point, beta)
    else:
        raise ValueError(f"unknown model {model!r}")
    return h - 0.5 * lam * norm_sq(point)


def quadratic_coeff_weights(M: int) -> np.ndarray:
    """Diagonal (1, k^2, k^2) of the quadratic part of the Gibbs potentials."""
    k = np.arange(1, M + 1, dtype=float)
    return np.concatenate(([1.0], k ** 2, k ** 2))


def _quadratic_part(f: FourierField) -> float:
    w = quadratic_coeff_weights(f.M)
    c = f.coeffs()
    return 0.5 * float(np.dot(w * c, c))


def _coeffs_of_grid_product(values: np.ndarray, M: int) -> np.ndarray:
    """Coefficients of the orthonormal-basis projection of grid samples."""
    return from_grid(values, M).coeffs()


def gibbs_potential(f: FourierField, beta: float) -> float:
    """kdv potential V = a0^2/2 + 1/2 sum k^2(a_k^2+b_k^2) - beta/6 int phi^3."""
    return _quadratic_part(f) - beta / 6.0 * _power_integral(f, 3)


def gibbs_potential_grad(f: FourierField, beta: float) -> np.ndarray:
    """Coefficient gradient of `gibbs_potential`; cubic part via quadrature."""
    n = dealiased_grid_size(f.M)
    phi = to_grid(f, n).values
    cubic_grad = _coeffs_of_grid_product(phi * phi, f.M)
    return quadratic_coeff_weights(f.M) * f.coeffs() - 0.5 * beta * cubic_grad


def gibbs_potential_tail(f: FourierField, beta: float, K: int) -> float:
    """Full quadratic part, cubic part restricted to modes >= K+1.

    For K >= M the cubic term is empty and the value is purely quadratic.
    """
    if K < 0:
        raise ValueError("K must be nonnegative")
    t = tail_field(f, K)
    return _quadratic_part(f) - beta / 6.0 * _power_integral(t, 3)


def mkdv_potential(f: FourierField, beta: float) -> float:
    return _quadratic_part(f) - beta / 12.0 * _power_integral(f, 4)


def mkdv_potential_grad(f: FourierField, beta: float) -> np.ndarray:
    n = dealiased_grid_size(f.M)
    phi = to_grid(f, n).values
    return quadratic_coeff_weights(f.M) * f.coeffs() - beta / 3.0 * _coeffs_of_grid_product(phi ** 3, f.M)


def nls_potential(u: NlsField, beta: float) -> float:
    n = dealiased_grid_size(u.M)
    p = to_grid(u.P, n).values
    q = to_grid(u.Q, n).values
    quartic = float(np.mean((p * p + q * q) ** 2))
    return _quadratic_part(u.P) + _quadratic_part(u.Q) + beta / 4.0 * quartic


def nls_potential_grad(u: NlsField, beta: float) -> np.ndarray:
    n = dealiased_grid_size(u.M)
    p = to_grid(u.P, n).values
    q = to_grid(u.Q, n).values
    g = p * p + q * q
    w = quadratic_coeff_weights(u.M)
    gp = w * u.P.coeffs() + beta * _coeffs_of_grid_product(g * p, u.M)
    gq = w * u.Q.coeffs() + beta * _coeffs_of_grid_product(g * q, u.M)
    return np.concatenate([gp, gq])


def interaction(model: str, point) -> float:
    """Signed interaction W so the Gibbs density reweights by exp(beta W).

    kdv:  W =  int phi^3 / 6
    mkdv: W =  int phi^4 / 12
    nls:  W = -int (P^2+Q^2)^2 / 4   (never positive)
    """
    if model == "kdv":
        return _power_integral(point, 3) / 6.0
    if model == "mkdv":
        return _power_integral(point, 4) / 12.0
    if model == "nls":
        n = dealiased_grid_size(point.M)
        p = to_grid(point.P, n).values
        q = to_grid(point.Q, n).values
        return -0.25 * float(np.mean((p * p + q * q) ** 2))
    raise ValueError(f"unknown model {model!r}")


def interaction_upper_bound(model: str, N: float, M: int) -> float:
    """Supremum of `interaction` over the ball ||.||^2 <= N.

    Uses the pointwise bound sup|phi| <= sqrt(2M+1) ||phi||_{L2} that the
    Cauchy-Schwarz inequality gives in the unitary basis, so the bound is
    valid for every field of truncation M inside the ball.
    """
    if model == "kdv":
        return np.sqrt(2 * M + 1) * N ** 1.5 / 6.0
    if model == "mkdv":
        return (2 * M + 1) * N ** 2 / 12.0
    if model == "nls":
        return 0.0
    raise ValueError(f"unknown model {model!r}")
