"""Command-line surface tying the toolkit into reproducible experiments.

Every subcommand writes its artifacts into --out (default: the working
directory) together with a `run.json` manifest listing the resolved
parameters, the seed, and a sha256 for each output file.  Identical argv
and seed give byte-identical JSON/CSV outputs; the wall-clock field lives
only in the manifest.  Exit codes: 0 success, 2 a check failed (a
certificate, bound, or invariance test), 1 runtime error, 64 bad flags.

Flag values win over --config (a single JSON document of flag defaults),
which wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .concentration import empirical_mgf, inner_observable, norm_observable
from .convexity import certify_convexity
from .cnoidal import (cnoidal_profile, cubic_roots_trig, modulus_from_roots,
                      solve_on_sphere, solve_periodic_family, CnoidalParams)
from .fields import FourierField, grid_points, to_grid
from .floquet import instability_intervals, standard_lame_potential
from .flow import FlowConfig, evolve, invariance_experiment
from .hamiltonians import EnsembleParams
from .sampling import chain_diagnostics, sample_brownian_loop, sample_gibbs, save_batch
from .svg import write_line_plot

__all__ = ["main", "run"]

_USAGE_EXIT = 64
_CHECK_EXIT = 2
_ERROR_EXIT = 1


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(_USAGE_EXIT)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not serializable: {type(obj)!r}")


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(outdir: Path, subcommand: str, params: dict,
                    outputs: list[Path], passed, t_start: float) -> None:
    manifest = {
        "subcommand": subcommand,
        "parameters": params,
        "seed": params.get("seed"),
        "artifact_version": __version__,
        "outputs": {p.name: _sha256(p) for p in outputs},
        "passed": passed,
        "wall_clock_s": time.time() - t_start,
    }
    _write_json(outdir / "run.json", manifest)


def _resolve(args: argparse.Namespace, config: dict, defaults: dict) -> dict:
    """flags > config file > defaults, by destination name."""
    out = {}
    for key, default in defaults.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            out[key] = flag_val
        elif key in config:
            out[key] = config[key]
        else:
            out[key] = default
    return out


def _load_config(args: argparse.Namespace) -> dict:
    path = getattr(args, "config", None)
    if path is None:
        return {}
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config file must hold a JSON object")
    return doc


def _outdir(params: dict) -> Path:
    out = Path(params.get("out") or ".")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_common(p: argparse.ArgumentParser, model: bool = True) -> None:
    if model:
        p.add_argument("--model", choices=["kdv", "mkdv", "nls"])
    p.add_argument("--config", help="JSON document of flag defaults")
    p.add_argument("--out", help="output directory (default: cwd)")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--svg", action="store_true", default=None,
                   help="also render an SVG line plot")


def _cmd_sample(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    params = _resolve(args, cfg, {
        "model": "kdv", "beta": 0.1, "N": 1.0, "M": 8, "n_samples": 1000,
        "method": "rejection", "n_chains": 4, "burn_in": 1000, "thin": 1,
        "proposal_scale": 0.5, "seed": 0, "threads": None, "out": None,
        "svg": False,
    })
    ens = EnsembleParams(params["model"], params["beta"], params["N"], params["M"])
    batch = sample_gibbs(ens, params["n_samples"], seed=params["seed"],
                         method=params["method"], n_chains=params["n_chains"],
                         burn_in=params["burn_in"], thin=params["thin"],
                         proposal_scale=params["proposal_scale"],
                         threads=params["threads"])
    outdir = _outdir(params)
    batch_dir = outdir / "samples"
    save_batch(batch, batch_dir)
    stats = chain_diagnostics(batch, {"norm_sq": lambda b: b.norms_sq()})
    diag_path = outdir / "diagnostics.json"
    doc = stats.to_json_dict()
    doc["method"] = batch.method
    doc["n_samples"] = len(batch.coeffs)
    _write_json(diag_path, doc)
    outputs = [diag_path, batch_dir / "manifest.json"]
    print(f"sampled {len(batch.coeffs)} fields "
          f"(method={batch.method}, acceptance={batch.acceptance_rate:.3g})")
    _write_manifest(outdir, "sample", params, outputs, True, t0)
    return 0


def _cmd_certify(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    params = _resolve(args, cfg, {
        "model": "kdv", "beta": 0.001, "N": 1.0, "M": 32, "n_points": 100,
        "n_directions": 20, "seed": 0, "threads": None, "out": None,
        "svg": False,
    })
    cert = certify_convexity(params["model"], params["beta"], params["N"],
                             params["M"], n_points=params["n_points"],
                             n_directions=params["n_directions"],
                             seed=params["seed"],
                             threads=params["threads"] or 1)
    outdir = _outdir(params)
    cert_path = outdir / "certificate.json"
    _write_json(cert_path, cert.to_json_dict())
    verdict = "PASS" if cert.passed else "FAIL"
    alpha_txt = "none" if cert.alpha is None else f"{cert.alpha:.6g}"
    print(f"convexity certificate [{verdict}] model={cert.model} "
          f"min_form={cert.sampled_min_form:.6g} alpha={alpha_txt}")
    _write_manifest(outdir, "certify", params, [cert_path], cert.passed, t0)
    return 0 if cert.passed else _CHECK_EXIT


def _cmd_concentration(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    params = _resolve(args, cfg, {
        "model": "kdv", "beta": 0.001, "N": 1.0, "M": 8, "n_samples": 20000,
        "observable": "inner", "mode": 1, "t_max": 2.0, "t_points": 21,
        "alpha": 0.5, "n_boot": 200, "seed": 0, "threads": None,
        "out": None, "svg": False,
    })
    ens = EnsembleParams(params["model"], params["beta"], params["N"], params["M"])
    batch = sample_gibbs(ens, params["n_samples"], seed=params["seed"],
                         threads=params["threads"])
    if params["observable"] == "norm":
        F = norm_observable()
    elif params["observable"] == "inner":
        M = params["M"]
        mode = params["mode"]
        if not 0 <= mode <= M:
            raise ValueError(f"--mode must lie in [0, {M}]")
        a = np.zeros(M)
        if mode == 0:
            g = FourierField(1.0, a, a.copy())
        else:
            a[mode - 1] = 1.0
            g = FourierField(0.0, a, np.zeros(M))
        F = inner_observable(g)
    else:
        raise ValueError(f"unknown observable {params['observable']!r}")
    t_grid = np.linspace(-params["t_max"], params["t_max"], params["t_points"])
    report = empirical_mgf(batch, F, t_grid, alpha=params["alpha"],
                           n_boot=params["n_boot"], seed=params["seed"])
    outdir = _outdir(params)
    json_path = outdir / "mgf.json"
    csv_path = outdir / "mgf.csv"
    _write_json(json_path, report.to_json_dict())
    report.dump_csv(csv_path)
    outputs = [json_path, csv_path]
    if params["svg"]:
        svg_path = outdir / "mgf.svg"
        write_line_plot(svg_path, [
            (report.t_grid, report.log_mgf, "log MGF"),
            (report.t_grid, report.bound, "bound t^2/(2 alpha)"),
        ], title="centered log MGF vs sub-Gaussian bound", xlabel="t",
            ylabel="log J(t)")
        outputs.append(svg_path)
    verdict = "PASS" if report.passed else "FAIL"
    print(f"concentration [{verdict}] observable={F.name} "
          f"max log MGF excess={float(np.max(report.log_mgf - report.bound)):.3g}")
    _write_manifest(outdir, "concentration", params, outputs, report.passed, t0)
    return 0 if report.passed else _CHECK_EXIT


def _cmd_cnoidal(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    params = _resolve(args, cfg, {
        "beta": 1.0, "lam": None, "N": None, "m": 1, "C": None,
        "lambda_range": (-30.0, -1.2), "profile_points": 512,
        "seed": 0, "threads": None, "out": None, "svg": False,
    })
    outdir = _outdir(params)
    outputs = []
    if params["C"] is not None:
        # direct first-integral route: report the root set and modulus
        # without requiring the wave to close up on the circle
        if params["lam"] is None:
            raise ValueError("--C needs --lambda as well")
        roots = cubic_roots_trig(params["beta"], params["lam"], params["C"])
        mod, ell = modulus_from_roots(roots, params["beta"])
        arg_scale = math.sqrt(params["beta"] * (roots.f1 - roots.f3) / 12.0)
        doc = {
            "beta": params["beta"], "lambda": params["lam"], "C": params["C"],
            "roots": [roots.f1, roots.f2, roots.f3], "k": mod.k,
            "ksq": mod.k ** 2, "ell": ell, "gamma": roots.gamma,
            "crests_if_periodic": 2.0 * math.pi * arg_scale,
        }
        json_path = outdir / "cnoidal.json"
        _write_json(json_path, doc)
        outputs.append(json_path)
        print(f"root set ({roots.f1:.6g}, {roots.f2:.6g}, {roots.f3:.6g}) "
              f"k={mod.k:.6g} ell={ell:.6g}")
        _write_manifest(outdir, "cnoidal", params, outputs, True, t0)
        return 0

    if params["N"] is not None:
        lo, hi = params["lambda_range"]
        wave = solve_on_sphere(params["beta"], params["N"], params["m"], lo, hi)
    elif params["lam"] is not None:
        wave = solve_periodic_family(params["beta"], params["lam"], params["m"])
    else:
        raise ValueError("need --lambda, --N, or --C")
    if wave is None:
        print("no periodic family for these parameters", file=sys.stderr)
        _write_manifest(outdir, "cnoidal", params, [], False, t0)
        return _CHECK_EXIT

    json_path = outdir / "cnoidal.json"
    _write_json(json_path, wave.to_json_dict())
    profile = cnoidal_profile(wave, params["profile_points"])
    csv_path = outdir / "profile.csv"
    profile.dump_csv(csv_path)
    outputs = [json_path, csv_path]
    if params["svg"]:
        svg_path = outdir / "profile.svg"
        x = grid_points(params["profile_points"])
        write_line_plot(svg_path, [(x, profile.values, "")],
                        title="cnoidal wave", xlabel="x", ylabel="phi")
        outputs.append(svg_path)
    print(f"cnoidal wave m={wave.m} k={wave.k:.6g} "
          f"roots=({wave.roots.f1:.6g}, {wave.roots.f2:.6g}, {wave.roots.f3:.6g})")
    _write_manifest(outdir, "cnoidal", params, outputs, True, t0)
    return 0


def _cmd_floquet(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    params = _resolve(args, cfg, {
        "beta": 1.0, "lam": None, "m": 1, "ell": None, "k": None,
        "range": (-2.0, 30.0), "scan_points": 2000, "seed": 0,
        "threads": None, "out": None, "svg": False,
    })
    if params["ell"] is not None:
        if params["k"] is None:
            raise ValueError("--ell needs --k")
        potential, period = standard_lame_potential(int(params["ell"]), params["k"])
        hill_beta = 1.0
        source = {"kind": "standard_lame", "ell": params["ell"], "k": params["k"]}
    else:
        if params["lam"] is None:
            raise ValueError("need --lambda (cnoidal potential) or --ell/--k")
        wave = solve_periodic_family(params["beta"], params["lam"], params["m"])
        if wave is None:
            print("no periodic family for these parameters", file=sys.stderr)
            outdir = _outdir(params)
            _write_manifest(outdir, "floquet", params, [], False, t0)
            return _CHECK_EXIT
        profile = cnoidal_profile(wave, 512)
        potential, period = profile, 2.0 * math.pi
        hill_beta = params["beta"]
        source = {"kind": "cnoidal", "beta": params["beta"],
                  "lambda": params["lam"], "m": params["m"], "k": wave.k}
    lo, hi = params["range"]
    result = instability_intervals(potential, hill_beta, (lo, hi),
                                   scan_points=params["scan_points"],
                                   period=period, threads=params["threads"])
    outdir = _outdir(params)
    json_path = outdir / "floquet.json"
    doc = result.to_json_dict()
    doc["potential"] = source
    _write_json(json_path, doc)
    csv_path = outdir / "trace.csv"
    result.dump_csv(csv_path)
    outputs = [json_path, csv_path]
    if params["svg"]:
        svg_path = outdir / "trace.svg"
        two = np.full_like(result.lambda_grid, 2.0)
        write_line_plot(svg_path, [
            (result.lambda_grid, np.clip(result.traces, -6, 6), "trace"),
            (result.lambda_grid, two, "+2"),
            (result.lambda_grid, -two, "-2"),
        ], title="Hill discriminant", xlabel="lambda", ylabel="trace")
        outputs.append(svg_path)
    n_unstable = len(result.unstable_intervals)
    print(f"floquet scan: {n_unstable} instability intervals, "
          f"lambda0={result.lambda0:.8g}")
    _write_manifest(outdir, "floquet", params, outputs, True, t0)
    return 0


def _load_initial(path: str, model: str, M: int):
    f = FourierField.load_json(Path(path))
    if model == "nls":
        raise ValueError("JSON initial data is only supported for real models")
    if f.M != M:
        raise ValueError(f"initial field has M={f.M}, expected {M}")
    return f


def _cmd_evolve(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    params = _resolve(args, cfg, {
        "model": "kdv", "beta": 0.1, "M": 16, "n": 128, "dt": 1e-3,
        "T": 1.0, "save_every": 100, "initial": None, "seed": 0,
        "threads": None, "out": None, "svg": False,
    })
    if params["initial"] is not None:
        state = _load_initial(params["initial"], params["model"], params["M"])
    elif params["model"] == "nls":
        from .hamiltonians import NlsField
        state = NlsField(sample_brownian_loop(params["M"], params["seed"]),
                         sample_brownian_loop(params["M"], params["seed"] + 1))
    else:
        state = sample_brownian_loop(params["M"], params["seed"])
    config = FlowConfig(params["model"], params["beta"], params["dt"],
                        params["T"], params["M"], params["n"],
                        save_every=params["save_every"])
    result = evolve(state, config)
    outdir = _outdir(params)
    csv_path = outdir / "trajectory.csv"
    n = params["n"]
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("t," + ",".join(f"u{i}" for i in range(n)) + "\n")
        for t, st in zip(result.times, result.states):
            if params["model"] == "nls":
                vals = to_grid(st.P, n).values
            else:
                vals = to_grid(st, n).values
            fh.write(f"{float(t)!r}," + ",".join(repr(float(v)) for v in vals) + "\n")
    report_path = outdir / "report.json"
    _write_json(report_path, {
        "times": result.report.times,
        "l2_series": result.report.l2_series,
        "energy_series": result.report.energy_series,
        "l2_drift": result.report.l2_drift,
        "energy_drift": result.report.energy_drift,
    })
    outputs = [csv_path, report_path]
    if params["svg"]:
        svg_path = outdir / "final_state.svg"
        x = grid_points(n)
        st = result.final
        series = ([(x, to_grid(st.P, n).values, "P"), (x, to_grid(st.Q, n).values, "Q")]
                  if params["model"] == "nls" else [(x, to_grid(st, n).values, "")])
        write_line_plot(svg_path, series, title=f"state at t={params['T']:g}",
                        xlabel="x", ylabel="u")
        outputs.append(svg_path)
    print(f"evolved to T={params['T']:g}: l2 drift {result.report.l2_drift:.3g}, "
          f"energy drift {result.report.energy_drift:.3g}")
    _write_manifest(outdir, "evolve", params, outputs, True, t0)
    return 0


def _cmd_invariance(args) -> int:
    t0 = time.time()
    cfg = _load_config(args)
    params = _resolve(args, cfg, {
        "model": "kdv", "beta": 0.001, "N": 1.0, "M": 16, "n_samples": 2000,
        "T": 1.0, "dt": 1e-3, "alpha": 0.01, "seed": 0, "threads": None,
        "out": None, "svg": False,
    })
    ens = EnsembleParams(params["model"], params["beta"], params["N"], params["M"])
    report = invariance_experiment(ens, params["T"], params["n_samples"],
                                   seed=params["seed"], dt=params["dt"],
                                   alpha=params["alpha"],
                                   threads=params["threads"])
    outdir = _outdir(params)
    report_path = outdir / "invariance.json"
    _write_json(report_path, {
        "observables": report["observables"],
        "threshold": report["threshold"],
        "all_passed": report["all_passed"],
        "n_samples": report["n_samples"],
        "T": report["T"],
        "dt": report["dt"],
    })
    outputs = [report_path]
    if params["svg"]:
        svg_path = outdir / "invariance.svg"
        before = np.sort(np.sum(report["initial_coeffs"] ** 2, axis=1))
        after = np.sort(np.sum(report["evolved_coeffs"] ** 2, axis=1))
        q = np.linspace(0.0, 1.0, len(before))
        write_line_plot(svg_path, [(before, q, "before"), (after, q, "after")],
                        title="norm-squared empirical CDF", xlabel="|phi|^2",
                        ylabel="quantile")
        outputs.append(svg_path)
    verdict = "PASS" if report["all_passed"] else "FAIL"
    stats = ", ".join(f"{k}={v['statistic']:.4f}"
                      for k, v in report["observables"].items())
    print(f"invariance [{verdict}] threshold={report['threshold']:.4f} {stats}")
    _write_manifest(outdir, "invariance", params, outputs,
                    report["all_passed"], t0)
    return 0 if report["all_passed"] else _CHECK_EXIT


def _build_parser() -> _Parser:
    parser = _Parser(prog="gibbskdv",
                     description="Gibbs ensembles, certificates, cnoidal "
                                 "waves and flows on the circle")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    sub.required = True

    p = sub.add_parser("sample", help="draw from a truncated Gibbs ensemble")
    _add_common(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--N", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--method", choices=["rejection", "importance", "metropolis"])
    p.add_argument("--n-chains", dest="n_chains", type=int)
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--proposal-scale", dest="proposal_scale", type=float)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("certify", help="sampled uniform-convexity certificate")
    _add_common(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--N", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--n-directions", dest="n_directions", type=int)
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("concentration",
                       help="empirical MGF vs sub-Gaussian bound")
    _add_common(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--N", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--observable", choices=["inner", "norm"])
    p.add_argument("--mode", type=int, help="coefficient index for inner")
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--t-points", dest="t_points", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n-boot", dest="n_boot", type=int)
    p.set_defaults(func=_cmd_concentration)

    p = sub.add_parser("cnoidal", help="construct a cnoidal stationary wave")
    _add_common(p, model=False)
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--N", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--C", type=float,
                   help="first-integral constant: report the root set "
                        "directly, no periodicity requirement")
    p.add_argument("--lambda-range", dest="lambda_range", type=float, nargs=2)
    p.add_argument("--profile-points", dest="profile_points", type=int)
    p.set_defaults(func=_cmd_cnoidal)

    p = sub.add_parser("floquet", help="Hill discriminant scan and "
                                       "instability intervals")
    _add_common(p, model=False)
    p.add_argument("--beta", type=float)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--ell", type=float, help="use a standard Lame potential")
    p.add_argument("--k", type=float, help="elliptic modulus for --ell")
    p.add_argument("--range", type=float, nargs=2)
    p.add_argument("--scan-points", dest="scan_points", type=int)
    p.set_defaults(func=_cmd_floquet)

    p = sub.add_parser("evolve", help="run the split-step flow")
    _add_common(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--save-every", dest="save_every", type=int)
    p.add_argument("--initial", help="JSON field file for the initial state")
    p.set_defaults(func=_cmd_evolve)

    p = sub.add_parser("invariance", help="statistical invariance experiment")
    _add_common(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--N", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--alpha", type=float)
    p.set_defaults(func=_cmd_invariance)

    return parser


def run(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _ERROR_EXIT


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
