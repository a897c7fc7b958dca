"""Truncated real Fourier fields on the circle.

A field of truncation M is

    phi(x) = a0 + sum_{k=1..M} sqrt(2) * (a_k cos kx + b_k sin kx),

with coefficients (a0, a_1..a_M, b_1..b_M) stored contiguously in that
order.  The sqrt(2) normalization makes the coefficient map unitary from
the Euclidean norm onto L2 of the normalized measure dx/2pi:

    ||phi||^2_{L2(dx/2pi)} = a0^2 + sum_k (a_k^2 + b_k^2).

Every integral over the circle in this package is taken against dx/2pi,
which on a uniform n-point grid is the plain mean of the sampled values.
That quadrature is exact for trigonometric polynomials whose degree stays
below the grid size, so products of truncated fields are integrated
exactly once the grid is large enough (see `dealiased_grid_size`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

__all__ = [
    "FourierField",
    "GridField",
    "l2_norm_sq",
    "inner",
    "h_half_inner",
    "derivative",
    "inv_sqrt_laplacian",
    "to_grid",
    "from_grid",
    "grid_points",
    "quadrature_mean",
    "min_grid_size",
    "dealiased_grid_size",
    "translate",
    "head_field",
    "tail_field",
    "basis_matrix",
]


def _as_locked_array(x) -> np.ndarray:
    arr = np.array(x, dtype=float, copy=True)
    if arr.ndim != 1:
        raise ValueError("coefficient arrays must be one dimensional")
    if not np.all(np.isfinite(arr)):
        raise ValueError("coefficients must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class FourierField:
    """Real trigonometric polynomial in the unitary cos/sin basis."""

    a0: float
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "a0", float(self.a0))
        if not np.isfinite(self.a0):
            raise ValueError("a0 must be finite")
        object.__setattr__(self, "a", _as_locked_array(self.a))
        object.__setattr__(self, "b", _as_locked_array(self.b))
        if self.a.shape != self.b.shape:
            raise ValueError("cos and sin coefficient arrays must have equal length")

    @property
    def M(self) -> int:
        return len(self.a)

    def coeffs(self) -> np.ndarray:
        """Coefficient vector (a0, a_1..a_M, b_1..b_M), length 2M+1."""
        return np.concatenate(([self.a0], self.a, self.b))

    @staticmethod
    def from_coeffs(c, M: int | None = None) -> "FourierField":
        c = np.asarray(c, dtype=float)
        if M is None:
            if len(c) % 2 != 1:
                raise ValueError("coefficient vector length must be odd")
            M = (len(c) - 1) // 2
        if len(c) != 2 * M + 1:
            raise ValueError("coefficient vector has wrong length")
        return FourierField(c[0], c[1 : M + 1], c[M + 1 :])

    @staticmethod
    def zero(M: int) -> "FourierField":
        return FourierField(0.0, np.zeros(M), np.zeros(M))

    def evaluate(self, x):
        """Pointwise values phi(x); x may be a scalar or an array."""
        x = np.asarray(x, dtype=float)
        k = np.arange(1, self.M + 1)
        kx = np.multiply.outer(x, k)
        vals = self.a0 + np.sqrt(2.0) * (np.cos(kx) @ self.a + np.sin(kx) @ self.b)
        return vals if vals.shape else float(vals)

    def to_json_dict(self) -> dict:
        return {"a0": self.a0, "a": self.a.tolist(), "b": self.b.tolist()}

    @staticmethod
    def from_json_dict(d: dict) -> "FourierField":
        return FourierField(d["a0"], np.asarray(d["a"], dtype=float), np.asarray(d["b"], dtype=float))

    def dump_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load_json(path) -> "FourierField":
        with open(path) as fh:
            return FourierField.from_json_dict(json.load(fh))


@dataclass(frozen=True)
class GridField:
    """Samples of a real field on the uniform grid x_i = 2 pi i / n."""

    values: np.ndarray = dc_field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _as_locked_array(self.values))
        if len(self.values) < 4 or len(self.values) % 2 != 0:
            raise ValueError("grid size must be even and at least 4")

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def x(self) -> np.ndarray:
        return grid_points(self.n)

    def dump_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("x,value\n")
            for xi, vi in zip(self.x, self.values):
                fh.write(f"{xi!r},{vi!r}\n")


def grid_points(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def quadrature_mean(values) -> float:
    """Integral against dx/2pi of grid samples: the plain mean."""
    return float(np.mean(values))


def min_grid_size(M: int) -> int:
    """Smallest grid that keeps all modes of a truncation-M field distinct."""
    return 2 * M + 2


def dealiased_grid_size(M: int) -> int:
    """Next power of two >= 4M+2, enough for exact quartic quadrature."""
    n = 1
    while n < 4 * M + 2:
        n *= 2
    return n


def l2_norm_sq(f: FourierField) -> float:
    """Squared L2(dx/2pi) norm, by Parseval equal to the coefficient norm."""
    return float(f.a0 ** 2 + np.dot(f.a, f.a) + np.dot(f.b, f.b))


def inner(f: FourierField, g: FourierField) -> float:
    """L2(dx/2pi) pairing; the basis is orthonormal so this is a dot product."""
    if f.M != g.M:
        m = max(f.M, g.M)
        f, g = pad_to(f, m), pad_to(g, m)
    return float(f.a0 * g.a0 + np.dot(f.a, g.a) + np.dot(f.b, g.b))


def h_half_inner(f: FourierField, g: FourierField) -> float:
    """Homogeneous H^{1/2} pairing sum_k |k| (a_k a'_k + b_k b'_k).

    The constant modes do not contribute.
    """
    if f.M != g.M:
        m = max(f.M, g.M)
        f, g = pad_to(f, m), pad_to(g, m)
    k = np.arange(1, f.M + 1, dtype=float)
    return float(np.dot(k * f.a, g.a) + np.dot(k * f.b, g.b))


def pad_to(f: FourierField, M: int) -> FourierField:
    if M < f.M:
        raise ValueError("cannot pad to a smaller truncation")
    if M == f.M:
        return f
    a = np.zeros(M)
    b = np.zeros(M)
    a[: f.M] = f.a
    b[: f.M] = f.b
    return FourierField(f.a0, a, b)


def derivative(f: FourierField) -> FourierField:
    """d/dx in coefficients: mode k maps (a_k, b_k) -> (k b_k, -k a_k)."""
    k = np.arange(1, f.M + 1, dtype=float)
    return FourierField(0.0, k * f.b, -k * f.a)


def inv_sqrt_laplacian(f: FourierField) -> FourierField:
    """Fourier multiplier 1/|k| on nonconstant modes; kills the mean.

    This is the square root of the inverse Laplacian on mean-zero fields.
    It is a contraction of L2 and satisfies the pairing identity
    h_half_inner(inv_sqrt_laplacian(f), g) == inner(f, g) whenever g has
    zero mean.
    """
    k = np.arange(1, f.M + 1, dtype=float)
    return FourierField(0.0, f.a / k, f.b / k)


def to_grid(f: FourierField, n: int) -> GridField:
    """Sample the field on the uniform n-point grid (n even, n >= 2M+2)."""
    if n < min_grid_size(f.M):
        raise ValueError(f"grid size {n} too small for truncation {f.M}")
    if n % 2 != 0:
        raise ValueError("grid size must be even")
    spec = np.zeros(n // 2 + 1, dtype=complex)
    spec[0] = f.a0
    spec[1 : f.M + 1] = (f.a - 1j * f.b) / np.sqrt(2.0)
    return GridField(np.fft.irfft(spec * n, n))


def from_grid(g: GridField | np.ndarray, M: int) -> FourierField:
    """Project grid samples onto the truncation-M basis by FFT.

    Exact inverse of `to_grid` when the grid resolves all modes.
    """
    values = g.values if isinstance(g, GridField) else np.asarray(g, dtype=float)
    n = len(values)
    if n < min_grid_size(M):
        raise ValueError(f"grid size {n} too small for truncation {M}")
    spec = np.fft.rfft(values) / n
    a0 = float(spec[0].real)
    a = np.sqrt(2.0) * spec[1 : M + 1].real
    b = -np.sqrt(2.0) * spec[1 : M + 1].imag
    return FourierField(a0, a, b)


def translate(f: FourierField, s: float) -> FourierField:
    """Field x -> phi(x + s); an L2 isometry mixing each (a_k, b_k) pair."""
    k = np.arange(1, f.M + 1, dtype=float)
    c, sn = np.cos(k * s), np.sin(k * s)
    return FourierField(f.a0, c * f.a + sn * f.b, c * f.b - sn * f.a)


_BASIS_CACHE: dict[tuple[int, int], np.ndarray] = {}


def basis_matrix(M: int, n: int) -> np.ndarray:
    """Rows are the orthonormal basis functions (1, sqrt2 cos kx, sqrt2 sin kx)
    sampled on the n-point grid; shape (2M+1, n).  Cached per (M, n)."""
    key = (M, n)
    if key not in _BASIS_CACHE:
        x = grid_points(n)
        k = np.arange(1, M + 1)
        kx = np.outer(k, x)
        E = np.empty((2 * M + 1, n))
        E[0] = 1.0
        E[1 : M + 1] = np.sqrt(2.0) * np.cos(kx)
        E[M + 1 :] = np.sqrt(2.0) * np.sin(kx)
        E.flags.writeable = False
        _BASIS_CACHE[key] = E
    return _BASIS_CACHE[key]


def head_field(f: FourierField, K: int) -> FourierField:
    """Constant mode plus modes 1..K, zero-padded back to truncation M."""
    a = np.zeros(f.M)
    b = np.zeros(f.M)
    kk = min(K, f.M)
    a[:kk] = f.a[:kk]
    b[:kk] = f.b[:kk]
    return FourierField(f.a0, a, b)


def tail_field(f: FourierField, K: int) -> FourierField:
    """Modes K+1..M only; the complement of `head_field` without the mean."""
    a = np.array(f.a)
    b = np.array(f.b)
    kk = min(K, f.M)
    a[:kk] = 0.0
    b[:kk] = 0.0
    return FourierField(0.0, a, b)
