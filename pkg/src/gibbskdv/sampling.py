"""Samplers for the ball-restricted Gibbs measures.

The base measure assigns independent Gaussians to the coefficients:
standard normal on the mean and variance 1/(2 j^2) on each cosine and
sine coefficient of mode j, matching a random Fourier series whose mode-j
amplitude decays like 1/j.  The target reweights by exp(beta W) with W
the model's interaction integral, restricted to the ball l2_norm_sq <= N.

Three routes are offered.  `rejection` is exact: it thins the base draws
by the ball indicator and an exp(beta W - bound) coin, where the bound is
the closed-form supremum of beta W over the ball, so no acceptance ratio
ever exceeds one.  `metropolis` runs several independent anisotropic
random-walk chains and merges them after burn-in.  `importance` keeps
every ball-conditioned draw and reports exp(beta W) weights instead.
"""

from __future__ import annotations

from dataclasses import dataclass
import json
import math
import os
import warnings

import numpy as np

from .fields import FourierField, basis_matrix, dealiased_grid_size
from .hamiltonians import MODELS, EnsembleParams, NlsField, interaction_upper_bound
from .parallel import pmap

__all__ = [
    "SampleBatch",
    "ChainStats",
    "loop_scales",
    "sample_brownian_loop",
    "log_interaction_weight",
    "sample_gibbs",
    "chain_diagnostics",
    "integrated_autocorr_time",
    "save_batch",
    "load_batch",
]

_REJECTION_CHUNK = 8192
_BALL_SLACK = 1e-12


def loop_scales(M: int) -> np.ndarray:
    """Standard deviations of the 2M+1 base-measure coefficients."""
    j = np.arange(1, M + 1, dtype=float)
    s = 1.0 / (np.sqrt(2.0) * j)
    return np.concatenate(([1.0], s, s))


def _coeff_scales(model: str, M: int) -> np.ndarray:
    s = loop_scales(M)
    return np.concatenate([s, s]) if model == "nls" else s


def sample_brownian_loop(M: int, seed) -> FourierField:
    """One draw from the Gaussian base measure at truncation M.

    `seed` may be an integer or a numpy Generator; a fixed integer gives a
    fixed field.
    """
    if M < 1:
        raise ValueError("need at least one oscillating mode")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    c = rng.standard_normal(2 * M + 1) * loop_scales(M)
    return FourierField(c[0], c[1:M + 1], c[M + 1:])


def log_interaction_weight(model: str, coeffs: np.ndarray, M: int, beta: float) -> np.ndarray:
    """beta * W per coefficient row, evaluated on the dealiased grid."""
    coeffs = np.atleast_2d(coeffs)
    n = dealiased_grid_size(M)
    E = basis_matrix(M, n)
    if model == "kdv":
        vals = coeffs @ E
        return beta * np.mean(vals ** 3, axis=1) / 6.0
    if model == "mkdv":
        vals = coeffs @ E
        return beta * np.mean(vals ** 4, axis=1) / 12.0
    if model == "nls":
        d = 2 * M + 1
        p = coeffs[:, :d] @ E
        q = coeffs[:, d:] @ E
        return -beta * 0.25 * np.mean((p * p + q * q) ** 2, axis=1)
    raise ValueError(f"unknown model {model!r}")


@dataclass
class SampleBatch:
    """Samples stored as coefficient rows; fields materialize on demand."""

    params: EnsembleParams
    coeffs: np.ndarray
    seed: int
    method: str
    acceptance_rate: float
    weights: np.ndarray | None = None
    n_chains: int = 1

    def __post_init__(self):
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        norms = np.sum(self.coeffs ** 2, axis=1)
        if norms.size and float(norms.max()) > self.params.N + _BALL_SLACK:
            raise ValueError("sample outside the ball constraint")
        if self.weights is not None:
            w = np.asarray(self.weights, dtype=float)
            if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
                raise ValueError("importance weights must be positive and finite")
            self.weights = w
        if not 0.0 <= self.acceptance_rate <= 1.0:
            raise ValueError("acceptance rate out of range")

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def norms_sq(self) -> np.ndarray:
        return np.sum(self.coeffs ** 2, axis=1)

    def field(self, i: int):
        row = self.coeffs[i]
        M = self.params.M
        if self.params.model == "nls":
            d = 2 * M + 1
            return NlsField(_row_to_field(row[:d], M), _row_to_field(row[d:], M))
        return _row_to_field(row, M)

    @property
    def samples(self) -> list:
        return [self.field(i) for i in range(len(self))]


def _row_to_field(row: np.ndarray, M: int) -> FourierField:
    return FourierField(float(row[0]), row[1:M + 1].copy(), row[M + 1:].copy())


def _log_density(model, coeffs, M, N, beta, scales):
    """Unnormalized log target per row; -inf outside the ball."""
    coeffs = np.atleast_2d(coeffs)
    norms = np.sum(coeffs ** 2, axis=1)
    quad = 0.5 * np.sum((coeffs / scales) ** 2, axis=1)
    logw = log_interaction_weight(model, coeffs, M, beta)
    out = logw - quad
    return np.where(norms <= N + _BALL_SLACK, out, -np.inf)


def _rejection(params, n_samples, rng, collect_weights):
    model, beta, N, M = params.model, params.beta, params.N, params.M
    scales = _coeff_scales(model, M)
    d = scales.size
    bound = beta * interaction_upper_bound(model, N, M)
    rows, wts = [], []
    kept = 0
    proposed = 0
    while kept < n_samples:
        c = rng.standard_normal((_REJECTION_CHUNK, d)) * scales
        proposed += _REJECTION_CHUNK
        inside = c[np.sum(c * c, axis=1) <= N]
        if inside.shape[0] == 0:
            continue
        logw = log_interaction_weight(model, inside, M, beta)
        if float(logw.max()) > bound + 1e-9:
            raise RuntimeError("interaction exceeded its closed-form bound")
        if collect_weights:
            rows.append(inside)
            wts.append(np.exp(logw))
            kept += inside.shape[0]
        else:
            u = rng.random(inside.shape[0])
            acc = np.log(u) < logw - bound
            rows.append(inside[acc])
            kept += int(acc.sum())
    coeffs = np.concatenate(rows)[:n_samples]
    weights = np.concatenate(wts)[:n_samples] if collect_weights else None
    return coeffs, weights, kept / proposed if proposed else 0.0


def _metropolis_chain(seed_seq, params, n_keep, burn_in, thin, proposal_scale):
    model, beta, N, M = params.model, params.beta, params.N, params.M
    rng = np.random.default_rng(seed_seq)
    scales = _coeff_scales(model, M)
    d = scales.size
    x = rng.standard_normal(d) * scales
    while float(np.sum(x * x)) > N:
        x = rng.standard_normal(d) * scales
    logp = float(_log_density(model, x, M, N, beta, scales)[0])
    sigma = proposal_scale
    out = np.empty((n_keep, d))
    accepted = 0
    total = 0
    window_acc = 0
    stored = 0
    step = 0
    n_steps = burn_in + n_keep * thin
    while step < n_steps:
        y = x + sigma * scales * rng.standard_normal(d)
        logq = float(_log_density(model, y, M, N, beta, scales)[0])
        if np.log(rng.random()) < logq - logp:
            x, logp = y, logq
            window_acc += 1
            if step >= burn_in:
                accepted += 1
        if step >= burn_in:
            total += 1
            if (step - burn_in) % thin == thin - 1:
                out[stored] = x
                stored += 1
        elif (step + 1) % 50 == 0:
            # burn-in only: nudge the scale toward acceptance 0.3, then
            # freeze so the recorded chain satisfies detailed balance
            sigma *= math.exp((window_acc / 50.0 - 0.3))
            window_acc = 0
        step += 1
    return out[:stored], accepted, total


def sample_gibbs(params: EnsembleParams, n_samples: int, seed: int = 0,
                 method: str = "rejection", n_chains: int = 4, burn_in: int = 1000,
                 thin: int = 1, proposal_scale: float = 0.5, threads=None) -> SampleBatch:
    """Draw n_samples from the ball-restricted Gibbs measure.

    rejection and importance consume a single stream; metropolis runs
    n_chains independent streams (spawned from the seed) merged in chain
    order, so a fixed seed fixes the output for any thread count.
    """
    if params.model not in MODELS:
        raise ValueError(f"unknown model {params.model!r}")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    if method == "rejection" or method == "importance":
        rng = np.random.default_rng(np.random.SeedSequence(seed))
        coeffs, weights, rate = _rejection(params, n_samples, rng,
                                           collect_weights=(method == "importance"))
        return SampleBatch(params, coeffs, seed, method, rate, weights)
    if method == "metropolis":
        if proposal_scale <= 0.0:
            raise ValueError("proposal_scale must be positive")
        if n_chains < 1:
            raise ValueError("need at least one chain")
        n_per = -(-n_samples // n_chains)
        children = np.random.SeedSequence(seed).spawn(n_chains)
        results = pmap(lambda s: _metropolis_chain(s, params, n_per, burn_in,
                                                   thin, proposal_scale),
                       children, threads)
        coeffs = np.concatenate([r[0] for r in results])[:n_samples]
        accepted = sum(r[1] for r in results)
        total = sum(r[2] for r in results)
        rate = accepted / total if total else 0.0
        return SampleBatch(params, coeffs, seed, method, rate, None, n_chains)
    raise ValueError(f"unknown method {method!r}")


def integrated_autocorr_time(series: np.ndarray) -> float:
    """Windowed autocorrelation-sum estimate of the correlation time.

    The window grows until it exceeds five times the running estimate,
    which balances bias against variance for desk-length chains.  A
    constant series has correlation time one by convention.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2:
        return 1.0
    x = x - x.mean()
    var = float(np.dot(x, x)) / n
    if var <= 1e-300:
        return 1.0
    nfft = 1
    while nfft < 2 * n:
        nfft *= 2
    f = np.fft.rfft(x, nfft)
    acf = np.fft.irfft(f * np.conj(f), nfft)[:n].real
    acf /= acf[0]
    tau = 1.0
    for k in range(1, min(n, 10000)):
        tau += 2.0 * acf[k]
        if k >= 5.0 * tau:
            break
    return max(tau, 1.0)


@dataclass(frozen=True)
class ChainStats:
    acceptance_rate: float
    tau: dict
    ess: dict

    def to_json_dict(self) -> dict:
        return {"acceptance_rate": self.acceptance_rate,
                "tau": dict(self.tau), "ess": dict(self.ess)}


def chain_diagnostics(batch: SampleBatch, observables: dict) -> ChainStats:
    """Autocorrelation times and effective sample sizes per observable.

    Correlation times are estimated per chain and averaged; the merged
    batch mixes independent chains, so a pooled estimate would see
    spurious decorrelation at the seams.  Warns when any effective
    sample size drops below 100.
    """
    n = len(batch)
    if n == 0:
        raise ValueError("empty batch")
    splits = np.array_split(np.arange(n), batch.n_chains)
    taus, esss = {}, {}
    for name, obs in observables.items():
        values = np.asarray(obs(batch), dtype=float)
        if values.shape != (n,):
            raise ValueError(f"observable {name!r} returned shape {values.shape}")
        if float(np.var(values)) <= 1e-300:
            taus[name] = 1.0
            esss[name] = float(n)
            continue
        tau = float(np.mean([integrated_autocorr_time(values[idx]) for idx in splits]))
        taus[name] = tau
        esss[name] = n / tau
        if esss[name] < 100.0:
            warnings.warn(f"effective sample size {esss[name]:.1f} < 100 "
                          f"for observable {name!r}", RuntimeWarning)
    return ChainStats(batch.acceptance_rate, taus, esss)


def _field_json(row: np.ndarray, model: str, M: int) -> dict:
    if model == "nls":
        d = 2 * M + 1
        return {"P": _coeff_json(row[:d], M), "Q": _coeff_json(row[d:], M)}
    return _coeff_json(row, M)


def _coeff_json(row: np.ndarray, M: int) -> dict:
    return {"a0": float(row[0]), "a": [float(v) for v in row[1:M + 1]],
            "b": [float(v) for v in row[M + 1:]]}


def _field_from_json(d: dict, model: str) -> np.ndarray:
    if model == "nls":
        return np.concatenate([_coeffs_from_json(d["P"]), _coeffs_from_json(d["Q"])])
    return _coeffs_from_json(d)


def _coeffs_from_json(d: dict) -> np.ndarray:
    return np.concatenate([[d["a0"]], d["a"], d["b"]]).astype(float)


def save_batch(batch: SampleBatch, directory) -> None:
    """Persist as a manifest plus one JSON field file per sample."""
    os.makedirs(directory, exist_ok=True)
    manifest = {
        "model": batch.params.model,
        "beta": batch.params.beta,
        "N": batch.params.N,
        "M": batch.params.M,
        "seed": batch.seed,
        "method": batch.method,
        "acceptance_rate": batch.acceptance_rate,
        "n_chains": batch.n_chains,
        "n_samples": len(batch),
        "has_weights": batch.weights is not None,
    }
    if batch.weights is not None:
        manifest["weights"] = [float(w) for w in batch.weights]
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
        fh.write("\n")
    model, M = batch.params.model, batch.params.M
    for i in range(len(batch)):
        path = os.path.join(directory, f"sample_{i:06d}.json")
        with open(path, "w") as fh:
            json.dump(_field_json(batch.coeffs[i], model, M), fh, sort_keys=True)
            fh.write("\n")


def load_batch(directory) -> SampleBatch:
    with open(os.path.join(directory, "manifest.json")) as fh:
        m = json.load(fh)
    params = EnsembleParams(m["model"], m["beta"], m["N"], m["M"])
    rows = []
    for i in range(m["n_samples"]):
        with open(os.path.join(directory, f"sample_{i:06d}.json")) as fh:
            rows.append(_field_from_json(json.load(fh), m["model"]))
    weights = np.array(m["weights"]) if m.get("has_weights") else None
    return SampleBatch(params, np.array(rows), m["seed"], m["method"],
                       m["acceptance_rate"], weights, m["n_chains"])
