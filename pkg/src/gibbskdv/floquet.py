"""Floquet analysis of Hill equations y'' + (beta q(x) + lambda) y = 0.

The monodromy matrix over one period has unit determinant, and its trace
(the Floquet discriminant) decides stability: |trace| <= 2 admits bounded
solutions, |trace| > 2 makes every nontrivial solution unbounded.  The
module scans the discriminant over a lambda window, bisects the |trace|=2
crossings, and reports the maximal instability intervals, including the
unbounded one (-inf, lambda0).

The same quadratic form appears in the local-minimum test for stationary
waves: the matrix of int (psi'^2 - (lambda + beta phi) psi^2) dx/2pi on
the trigonometric basis has minimum eigenvalue crossing zero exactly at
the bottom band edge lambda0, and `hamel_min_check` exposes that route so
the two can be compared.

A cnoidal wave phi = f1 - (f1-f2) sn(alpha(x-x1)|k)^2 turns, under
z = alpha(x - x1), into the standard sn^2-potential form with coefficient
beta (f1-f2)/alpha^2 = 12 k^2, i.e. index 3 regardless of the wave; the
exact correspondence trace_x(lambda over one crest) =
trace_z(mu over 2K) with mu = (beta f1 + lambda)/alpha^2 is used as a
cross-check between the two coordinate systems.
"""

from __future__ import annotations

from dataclasses import dataclass
import json
import math

import numpy as np
from scipy.integrate import solve_ivp

from .elliptic import complete_elliptic_k, jacobi_sn
from .fields import FourierField, GridField, basis_matrix, from_grid, to_grid
from .parallel import pmap

__all__ = [
    "FloquetResult",
    "floquet_trace",
    "instability_intervals",
    "hill_galerkin_matrix",
    "hamel_min_check",
    "standard_lame_potential",
    "lame_band_edges",
]

_SCAN_CHUNK = 256  # fixed batch size so results never depend on thread count
_WRONSKIAN_TOL = 1e-9


@dataclass(frozen=True)
class FloquetResult:
    lambda_grid: np.ndarray
    traces: np.ndarray
    intervals: list
    lambda0: float
    wronskian_err: float

    @property
    def unstable_intervals(self) -> list:
        return [iv for iv in self.intervals if iv[2] == "unstable"]

    def to_json_dict(self) -> dict:
        def num(v):
            return repr(float(v)) if math.isinf(v) else float(v)

        return {
            "lambda0": self.lambda0,
            "wronskian_err": self.wronskian_err,
            "intervals": [[num(lo), num(hi), kind] for lo, hi, kind in self.intervals],
            "n_unstable": len(self.unstable_intervals),
            "lambda_min": float(self.lambda_grid[0]),
            "lambda_max": float(self.lambda_grid[-1]),
            "scan_points": int(len(self.lambda_grid)),
        }

    def dump_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    def dump_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("lambda,trace\n")
            for lam, tr in zip(self.lambda_grid, self.traces):
                fh.write(f"{float(lam)!r},{float(tr)!r}\n")


def _as_potential(potential):
    """Normalize to a callable x -> q(x).

    GridFields and plain value arrays are interpreted as samples over one
    period and interpolated trigonometrically; callables pass through.
    """
    if callable(potential):
        return potential
    if isinstance(potential, GridField):
        vals = potential.values
    else:
        vals = np.asarray(potential, dtype=float)
    if vals.ndim != 1:
        raise ValueError("potential samples must be one-dimensional")
    f = from_grid(GridField(vals), len(vals) // 2 - 1)

    def q(x):
        return f.evaluate(x)

    return q


def _potential_min(q, period: float) -> float:
    """Rough minimum of q over one period, for segmentation planning."""
    xs = np.linspace(0.0, period, 257)
    try:
        v = np.asarray(q(xs), dtype=float)
        if v.shape != xs.shape:
            raise TypeError
    except TypeError:
        v = np.array([float(q(x)) for x in xs])
    return float(v.min())


def _monodromy(q, lams, period, beta, qmin=None, rtol=1e-11, atol=1e-12):
    """Monodromy traces and Wronskian drift for every lambda, in one solve
    per segment.

    Stacks the 2x2 systems y'' = -(beta q + lambda) y into a single state
    vector so the shared adaptive stepper controls each component to the
    local tolerance.  Deep below the spectrum solutions grow like
    exp(sqrt(-lambda - min beta q) x) and a single-pass determinant check
    would drown in cancellation, so the period is split into segments
    short enough that each factor stays moderate; the determinant is the
    product of well-conditioned segment determinants and the trace comes
    from multiplying the 2x2 factors.
    """
    lams = np.asarray(lams, dtype=float)
    nl = lams.size
    if qmin is None:
        # qmin is the minimum of beta*q over the period when supplied
        qmin = _potential_min(lambda x: beta * q(x), period)
    growth = math.sqrt(max(0.0, -(qmin + float(lams.min())))) * period
    n_seg = max(1, int(math.ceil(growth / 8.0)))
    seg = period / n_seg
    ssq = seg * seg
    y0 = np.tile(np.array([1.0, 0.0, 0.0, 1.0]), nl)

    mats = np.broadcast_to(np.eye(2), (nl, 2, 2)).copy()
    det_prod = np.ones(nl)
    for i in range(n_seg):
        x0 = i * seg

        def rhs(s, u):
            w = (beta * q(x0 + s * seg) + lams) * ssq
            U = u.reshape(nl, 4)
            dU = np.empty_like(U)
            dU[:, 0] = U[:, 1]
            dU[:, 1] = -w * U[:, 0]
            dU[:, 2] = U[:, 3]
            dU[:, 3] = -w * U[:, 2]
            return dU.ravel()

        sol = solve_ivp(rhs, (0.0, 1.0), y0, method="DOP853", rtol=rtol, atol=atol)
        if not sol.success:
            raise RuntimeError(f"monodromy integration failed: {sol.message}")
        U = sol.y[:, -1].reshape(nl, 4)
        # columns of the factor are the two solutions; trace and det are
        # invariant under the s-rescaling of the derivative rows
        N = np.empty((nl, 2, 2))
        N[:, 0, 0] = U[:, 0]
        N[:, 1, 0] = U[:, 1]
        N[:, 0, 1] = U[:, 2]
        N[:, 1, 1] = U[:, 3]
        det_prod *= U[:, 0] * U[:, 3] - U[:, 1] * U[:, 2]
        mats = N @ mats

    traces = mats[:, 0, 0] + mats[:, 1, 1]
    werr = float(np.max(np.abs(det_prod - 1.0)))
    if werr > _WRONSKIAN_TOL:
        raise RuntimeError(f"Wronskian drift {werr:.3e} exceeds {_WRONSKIAN_TOL}")
    return traces, werr


def floquet_trace(potential, lam, beta: float = 1.0, period: float = 2.0 * np.pi) -> float:
    """Discriminant (monodromy trace) of y'' + (beta q + lambda) y = 0."""
    q = _as_potential(potential)
    traces, _ = _monodromy(q, [float(lam)], period, beta)
    return float(traces[0])


def _batched_traces(q, lams, period, beta, qmin, threads=None):
    chunks = [lams[i:i + _SCAN_CHUNK] for i in range(0, len(lams), _SCAN_CHUNK)]
    parts = pmap(lambda c: _monodromy(q, c, period, beta, qmin), chunks, threads)
    traces = np.concatenate([p[0] for p in parts])
    werr = max(p[1] for p in parts)
    return traces, werr


def _refine_crossings(q, brackets, level, period, beta, qmin, tol):
    """Bisect trace(lambda) = level on each (lo, hi) bracket, batched."""
    if not brackets:
        return []
    lo = np.array([b[0] for b in brackets])
    hi = np.array([b[1] for b in brackets])
    flo, _ = _batched_traces(q, lo, period, beta, qmin)
    slo = np.sign(flo - level)
    while np.max(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        fmid, _ = _batched_traces(q, mid, period, beta, qmin)
        smid = np.sign(fmid - level)
        go_right = smid == slo
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    return list(0.5 * (lo + hi))


def instability_intervals(potential, beta: float, lambda_range, scan_points: int = 2000,
                          tol: float = 1e-8, period: float = 2.0 * np.pi,
                          closed_gap_tol: float = 1e-6, threads=None) -> FloquetResult:
    """Scan the discriminant and classify stable/unstable lambda intervals.

    The window must start inside the unbounded instability interval
    (trace > 2 at lambda_range[0]), otherwise the zeroth band edge lambda0
    cannot be certified and a ValueError explains the needed widening.
    Unstable slivers narrower than closed_gap_tol are treated as closed
    gaps (tangencies of the trace with +-2) and dropped; genuinely narrow
    bands below the scan resolution can be missed, so scan_points is the
    knob for suspicious spectra.
    """
    lam_lo, lam_hi = float(lambda_range[0]), float(lambda_range[1])
    if not lam_lo < lam_hi:
        raise ValueError("lambda_range must be increasing")
    if scan_points < 8:
        raise ValueError("scan_points too small to bracket anything")
    q = _as_potential(potential)
    qmin = _potential_min(lambda x: beta * q(x), period)
    grid = np.linspace(lam_lo, lam_hi, scan_points)
    traces, werr = _batched_traces(q, grid, period, beta, qmin, threads)
    if traces[0] <= 2.0:
        raise ValueError(
            "lambda_range too narrow: the unbounded instability interval is "
            f"not captured (trace at {lam_lo} is {traces[0]:.6f} <= 2); "
            "extend lambda_range[0] downward")

    edges = []
    for level in (2.0, -2.0):
        g = traces - level
        hit = np.nonzero(np.sign(g[:-1]) * np.sign(g[1:]) < 0)[0]
        brackets = [(grid[i], grid[i + 1]) for i in hit]
        edges.extend(_refine_crossings(q, brackets, level, period, beta, qmin, tol))
    exact = np.nonzero(np.abs(traces) == 2.0)[0]
    edges.extend(grid[exact])
    edges = sorted(set(edges))

    cuts = [lam_lo] + edges + [lam_hi]
    mids = np.array([0.5 * (cuts[i] + cuts[i + 1]) for i in range(len(cuts) - 1)])
    mtr, _ = _batched_traces(q, mids, period, beta, qmin)
    segs = [[cuts[i], cuts[i + 1], "unstable" if abs(mtr[i]) > 2.0 else "stable"]
            for i in range(len(cuts) - 1)]

    # drop closed-gap slivers, then merge neighbours of equal kind
    segs = [s for i, s in enumerate(segs)
            if i == 0 or s[2] == "stable" or (s[1] - s[0]) >= closed_gap_tol]
    merged = [segs[0]]
    for s in segs[1:]:
        if s[2] == merged[-1][2]:
            merged[-1][1] = s[1]
        else:
            merged.append(s)

    if merged[0][2] != "unstable":
        raise RuntimeError("inconsistent scan: leftmost segment not unstable")
    lambda0 = merged[0][1]
    merged[0][0] = float("-inf")
    intervals = [(float(lo), float(hi), kind) for lo, hi, kind in merged]
    return FloquetResult(lambda_grid=grid, traces=traces, intervals=intervals,
                         lambda0=float(lambda0), wronskian_err=werr)


def hill_galerkin_matrix(phi, beta: float, lam: float, basis_size: int) -> np.ndarray:
    """Matrix of int (psi'^2 - (lambda + beta phi) psi^2) dx/2pi on the
    orthonormal trigonometric basis with modes up to basis_size."""
    if basis_size < 3:
        raise ValueError("basis_size must be at least 3")
    f = phi if isinstance(phi, FourierField) else from_grid(phi, phi.n // 2 - 1)
    n = 4
    while n < 2 * basis_size + f.M + 2:
        n *= 2
    vals = to_grid(f, n).values
    E = basis_matrix(basis_size, n)
    S = (E * (vals / n)) @ E.T
    j = np.arange(1, basis_size + 1, dtype=float)
    quad = np.concatenate(([0.0], j * j, j * j))
    return np.diag(quad - lam) - beta * S


def hamel_min_check(phi, beta: float, lam: float, basis_size: int = 64) -> dict:
    """Local-minimum test for a stationary wave via the second variation.

    Returns the minimum eigenvalue of the Galerkin second-variation matrix
    and the verdict min_eig > 1e-10.  Because the matrix depends on lambda
    only through -lambda I, the minimum eigenvalue crosses zero at the
    Galerkin estimate of the bottom band edge lambda0.
    """
    A = hill_galerkin_matrix(phi, beta, lam, basis_size)
    min_eig = float(np.linalg.eigvalsh(A)[0])
    return {"min_eig": min_eig, "is_local_min": bool(min_eig > 1e-10)}


def standard_lame_potential(ell: float, k: float):
    """The sn^2 potential -ell(ell+1) k^2 sn(z|k)^2 and its period 2K(k).

    Returned as (callable, period) ready for floquet_trace or
    instability_intervals with beta=1.
    """
    if not (0.0 < k < 1.0):
        raise ValueError("modulus must lie in (0, 1)")
    if ell <= 0.0:
        raise ValueError("index must be positive")
    coeff = ell * (ell + 1.0) * k * k
    period = 2.0 * complete_elliptic_k(k)

    def q(z):
        s = jacobi_sn(z, k)
        return -coeff * s * s

    return q, period


def lame_band_edges(ell: int, k: float) -> list[float]:
    """Closed-form band edges of the standard sn^2 potential for index 1
    and 2, used as an independent oracle for the interval scan."""
    ksq = k * k
    if ell == 1:
        return [ksq, 1.0, 1.0 + ksq]
    if ell == 2:
        root = 2.0 * math.sqrt(1.0 - ksq + ksq * ksq)
        return [2.0 * (1.0 + ksq) - root, 1.0 + ksq, 1.0 + 4.0 * ksq,
                4.0 + ksq, 2.0 * (1.0 + ksq) + root]
    raise ValueError("closed forms implemented for index 1 and 2 only")
