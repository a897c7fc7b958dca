"""Complete elliptic integrals and Jacobi elliptic functions.

Everything here is built on the arithmetic-geometric mean.  For modulus
k in [0, 1) set a_0 = 1, b_0 = sqrt(1-k^2), c_0 = k and iterate

    a_{n+1} = (a_n + b_n)/2,   b_{n+1} = sqrt(a_n b_n),   c_{n+1} = (a_n - b_n)/2.

The c_n collapse quadratically, and

    K(k) = pi / (2 a_N).

The Jacobi amplitude is recovered by the descending Landen recursion: with
phi_N = 2^N a_N x one steps backwards through

    phi_{n-1} = ( phi_n + arcsin( (c_n/a_n) sin phi_n ) ) / 2,

after which am(x,k) = phi_0 and sn = sin(am), cn = cos(am),
dn = sqrt(1 - k^2 sn^2).  The recursion is applied on the reduced range
x in [0, K] where all amplitudes stay in [0, pi/2]; the rest of the real
line is reached through the reflection sn(2K - x) = sn(x), the
antiperiod sn(x + 2K) = -sn(x), and oddness.  In particular sn^2 has
real period 2K(k).
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "complete_elliptic_k",
    "jacobi_sn",
    "jacobi_sn_cn_dn",
    "jacobi_am",
    "sn_sq_period",
]

_MAX_AGM_ITER = 32
_AGM_TOL = 2.5e-16  # relative to a_n; c_n stagnates at rounding level


def _agm_scheme(k: float):
    """AGM coefficient ladder (a_n, b_n, c_n) for modulus k."""
    k = float(k)
    if not (0.0 <= k < 1.0):
        raise ValueError("modulus k must lie in [0, 1)")
    a = [1.0]
    b = [np.sqrt(1.0 - k * k)]
    c = [k]
    for _ in range(_MAX_AGM_ITER):
        if abs(c[-1]) <= _AGM_TOL * a[-1]:
            break
        an, bn = a[-1], b[-1]
        a.append(0.5 * (an + bn))
        b.append(np.sqrt(an * bn))
        c.append(0.5 * (an - bn))
    else:
        raise RuntimeError("AGM iteration failed to converge")
    return a, b, c


def complete_elliptic_k(k: float) -> float:
    """Complete elliptic integral K(k), modulus convention k in [0, 1)."""
    a, _, _ = _agm_scheme(k)
    return float(np.pi / (2.0 * a[-1]))


def _amplitude_reduced(x: np.ndarray, a, c) -> np.ndarray:
    """am(x, k) for x in [0, K]; amplitudes stay inside [0, pi/2]."""
    nlev = len(a) - 1
    phi = (2.0 ** nlev) * a[-1] * x
    for n in range(nlev, 0, -1):
        s = (c[n] / a[n]) * np.sin(phi)
        # roundoff can push |s| infinitesimally past 1 near x = K
        phi = 0.5 * (phi + np.arcsin(np.clip(s, -1.0, 1.0)))
    return phi


def jacobi_am(x, k: float):
    """Jacobi amplitude am(x, k) for x in [0, K(k)] (reduced range only)."""
    a, _, c = _agm_scheme(k)
    x = np.asarray(x, dtype=float)
    out = _amplitude_reduced(x, a, c)
    return out if out.shape else float(out)


def jacobi_sn_cn_dn(x, k: float):
    """sn, cn, dn at real x, vectorized, with signs correct on all of R."""
    a, _, c = _agm_scheme(k)
    x = np.asarray(x, dtype=float)
    scalar = x.shape == ()
    x = np.atleast_1d(x)
    K = np.pi / (2.0 * a[-1])

    # reduce to the fundamental period [0, 4K)
    t = np.mod(x, 4.0 * K)
    sn_sign = np.ones_like(t)
    # second half period: sn(x + 2K) = -sn(x), cn(x + 2K) = -cn(x)
    half = t >= 2.0 * K
    t = np.where(half, t - 2.0 * K, t)
    sn_sign = np.where(half, -sn_sign, sn_sign)
    cn_sign = sn_sign.copy()
    # reflect (K, 2K] onto [0, K): sn(2K - u) = sn(u), cn(2K - u) = -cn(u)
    refl = t > K
    t = np.where(refl, 2.0 * K - t, t)
    cn_sign = np.where(refl, -cn_sign, cn_sign)

    phi = _amplitude_reduced(t, a, c)
    sn = sn_sign * np.sin(phi)
    cn = cn_sign * np.cos(phi)
    dn = np.sqrt(np.clip(1.0 - (k * np.sin(phi)) ** 2, 0.0, None))
    if scalar:
        return float(sn[0]), float(cn[0]), float(dn[0])
    return sn, cn, dn


def jacobi_sn(x, k: float):
    """Jacobi elliptic sine sn(x, k) for real x, modulus k in [0, 1)."""
    sn, _, _ = jacobi_sn_cn_dn(x, k)
    return sn


def sn_sq_period(k: float, check_points: int = 64, tol: float = 1e-12) -> float:
    """Real period of sn^2, namely 2 K(k), verified on a sample grid."""
    period = 2.0 * complete_elliptic_k(k)
    xs = np.linspace(0.0, period, check_points, endpoint=False)
    s0 = jacobi_sn(xs, k)
    s1 = jacobi_sn(xs + period, k)
    err = float(np.max(np.abs(s1 * s1 - s0 * s0)))
    if err > tol:
        raise RuntimeError(f"sn^2 period check failed, deviation {err:.3e}")
    return period
