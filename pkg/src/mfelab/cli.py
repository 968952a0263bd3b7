"""Batch front-end: run configs in, branches and reports out.

Four subcommands over one JSON config format: `branch` writes the
continuation table plus per-point profile snapshots, `spectrum` the
per-mode eigenvalue scan, `pohozaev` the identity residuals, and `verify`
a diagnostics report checked against configurable thresholds.  Outputs
are deterministic: files carry the config hash, floats are written with
17 significant digits, and writes are atomic.

Exit codes: 0 success, 2 config error, 3 solver failure, 4 assertion
failure.  Failures are reported as one JSON object on stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import serialize
from .diagnostics import (
    local_rate_law_fit,
    matching_residual,
    outer_profile_residual,
    pohozaev_residual,
    pohozaev_residual_linearized,
    rate_law_fit,
    uniqueness_probe,
)
from .errors import ConfigError, MfelabError, ParameterDomainError, SolverError, WeightSpecError
from .linearization import b0_projection, kernel_candidate, nondegeneracy_scan
from .radial_solver import continue_branch, find_fold_pair
from .serialize import RunConfig

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def _apply_thread_limit() -> None:
    """Propagate MFELAB_THREADS to the BLAS/OpenMP pools.

    Pools initialize lazily at the first large factorization, so setting
    the standard variables here is effective for a fresh process; an
    already-warm embedder should export them before import instead.
    """
    val = os.environ.get("MFELAB_THREADS")
    if not val:
        return
    if not val.isdigit() or int(val) < 1:
        raise ConfigError("MFELAB_THREADS must be a positive integer", ["MFELAB_THREADS"])
    for var in _THREAD_VARS:
        os.environ.setdefault(var, val)


def _emit(obj: dict) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _run_branch(config: RunConfig):
    win = config.window
    return continue_branch(
        win["start"], win["end"], win["steps"], config.weight_spec(), config.mesh_policy()
    )


def _branch_meta(branch) -> dict:
    return {
        "lambda": [float(v) for v in branch.lambdas],
        "rho": [float(v) for v in branch.rhos],
        "fold_flags": [int(i) for i in branch.fold_flags],
        "failure": branch.failure,
    }


def cmd_branch(config: RunConfig) -> int:
    branch = _run_branch(config)
    h = config.config_hash()
    out = config.out
    paths = [os.path.join(out, "branch.csv")]
    serialize.atomic_write(paths[0], serialize.branch_csv(branch, config.r0, h))
    for i, pt in enumerate(branch.points):
        p = os.path.join(out, f"u_{i:04d}.csv")
        serialize.atomic_write(p, serialize.snapshot_csv(pt, h))
        paths.append(p)
    if branch.failure is not None:
        _emit({"error": {"code": 3, "kind": "solver", "detail": branch.failure,
                         "config_hash": h, "outputs": paths}})
        return 3
    _emit({"status": "ok", "config_hash": h, "outputs": paths})
    return 0


def cmd_spectrum(config: RunConfig) -> int:
    branch = _run_branch(config)
    h = config.config_hash()
    if branch.failure is not None:
        _emit({"error": {"code": 3, "kind": "solver", "detail": branch.failure, "config_hash": h}})
        return 3
    scan = nondegeneracy_scan(branch, k_max=config.k_max, seed=config.seed())
    path = os.path.join(config.out, "spectrum.csv")
    serialize.atomic_write(path, serialize.spectrum_csv(scan, h))
    _emit({"status": "ok", "config_hash": h, "outputs": [path]})
    return 0


def _pohozaev_rows(config: RunConfig, branch):
    r = config.r0
    rows = []
    if branch.fold_flags:
        policy = config.mesh_policy()
        for which in range(len(branch.fold_flags)):
            lo, hi = find_fold_pair(branch, policy, which=which)
            rows.append((hi.lam, "pair", r, pohozaev_residual(lo, hi, r)))
    else:
        for pt in branch.points:
            xi = kernel_candidate(pt)
            rows.append((pt.lam, "eigenfield", r, pohozaev_residual_linearized(pt, xi, r)))
    return rows


def cmd_pohozaev(config: RunConfig) -> int:
    branch = _run_branch(config)
    h = config.config_hash()
    if branch.failure is not None:
        _emit({"error": {"code": 3, "kind": "solver", "detail": branch.failure, "config_hash": h}})
        return 3
    path = os.path.join(config.out, "pohozaev.csv")
    serialize.atomic_write(path, serialize.pohozaev_csv(_pohozaev_rows(config, branch), h))
    _emit({"status": "ok", "config_hash": h, "outputs": [path]})
    return 0


def _decay_exponent(branch, values, window):
    lams = branch.lambdas
    lo, hi = window
    keep = (lams >= lo - 1e-6) & (lams <= hi + 1e-6)
    keep &= np.asarray(values) != 0.0
    if int(keep.sum()) < 5:
        raise ParameterDomainError(
            f"only {int(keep.sum())} usable points in the window [{lo}, {hi}]; "
            "a fit needs at least 5"
        )
    x = lams[keep]
    y = np.log(np.abs(np.asarray(values)[keep]))
    slope, _ = np.polyfit(x, y, 1)
    return float(-slope)


def _verify_document(config: RunConfig, branch):
    """Assemble the report and the list of failed assertions."""
    beta = 1.0 + config.alpha
    sigma_rate = 1.0 / (2.0 * beta)
    thr = config.thresholds
    toggles = set(config.diagnostics)
    window = config.fit_window
    failures = []

    doc: dict = {
        "branch": _branch_meta(branch),
        "rate_fit": None,
        "local_rate_fit": None,
        "matching": None,
        "outer": None,
        "pohozaev": None,
        "b0": None,
        "window": list(window),
        "config_hash": config.config_hash(),
    }
    if not toggles:
        return doc, failures

    # branch-level control: the continuation must be mesh-converged
    fine = continue_branch(
        config.window["start"], config.window["end"], config.window["steps"],
        config.weight_spec(), config.mesh_policy(nodes=2 * config.mesh["nodes"]),
    )
    if fine.failure is not None:
        failures.append({"check": "mesh-convergence", "detail": "doubled mesh did not converge"})
    else:
        rel = float(np.max(np.abs(fine.rhos - branch.rhos) / np.maximum(1.0, np.abs(branch.rhos))))
        if rel > thr["mesh_rtol"]:
            failures.append({
                "check": "mesh-convergence",
                "detail": f"rho shifts by {rel:.3e} under mesh doubling "
                          f"(threshold {thr['mesh_rtol']:.1e}); refine mesh.nodes",
            })

    if "rate" in toggles:
        fit = rate_law_fit(branch, window)
        doc["rate_fit"] = fit.to_dict()
        target = -1.0 / beta
        if abs(fit.slope - target) > thr["rate_slope_rtol"] * abs(target):
            failures.append({"check": "rate-slope",
                             "detail": f"slope {fit.slope:.4f} vs {target:.4f}"})
        if fit.r_squared < thr["r2_floor"]:
            failures.append({"check": "rate-fit-quality",
                             "detail": f"r^2 = {fit.r_squared:.4f}"})
    if "local_rate" in toggles:
        fit = local_rate_law_fit(branch, config.r0, window)
        d = fit.to_dict()
        d["r0"] = config.r0
        doc["local_rate_fit"] = d
    if "matching" in toggles:
        vals = [matching_residual(pt) for pt in branch.points]
        doc["matching"] = [float(v) for v in vals]
        exponent = _decay_exponent(branch, vals, window)
        if exponent < thr["decay_margin"] * sigma_rate:
            failures.append({"check": "matching-decay",
                             "detail": f"exponent {exponent:.4f} vs {sigma_rate:.4f}"})
    if "outer" in toggles:
        vals = [outer_profile_residual(pt, config.outer_radius) for pt in branch.points]
        doc["outer"] = [float(v) for v in vals]
        for gradient, label in ((False, "outer-decay"), (True, "outer-gradient-decay")):
            series = vals if not gradient else [
                outer_profile_residual(pt, config.outer_radius, gradient=True)
                for pt in branch.points
            ]
            exponent = _decay_exponent(branch, series, window)
            if exponent < thr["decay_margin"] * sigma_rate:
                failures.append({"check": label,
                                 "detail": f"exponent {exponent:.4f} vs {sigma_rate:.4f}"})
    if "pohozaev" in toggles:
        rows = _pohozaev_rows(config, branch)
        doc["pohozaev"] = {
            "kind": rows[0][1] if rows else "eigenfield",
            "radius": config.r0,
            "values": [float(r[3]) for r in rows],
        }
        worst = max((abs(r[3]) for r in rows), default=0.0)
        if worst > thr["pohozaev_tol"]:
            failures.append({"check": "pohozaev-residual",
                             "detail": f"max |residual| {worst:.3e}"})
        if branch.fold_flags:
            policy = config.mesh_policy()
            b0s = []
            for which in range(len(branch.fold_flags)):
                lo, hi = find_fold_pair(branch, policy, which=which)
                diff = hi.u_tilde - lo.u_tilde
                b0s.append(float(b0_projection(diff / np.max(np.abs(diff)), hi)))
            doc["b0"] = b0s
        else:
            doc["b0"] = []
    if "uniqueness" in toggles:
        verdict = uniqueness_probe(branch, window)
        if not verdict.ok:
            failures.append({"check": "uniqueness-monotonicity",
                             "detail": f"sign {verdict.sign} vs {verdict.expected_sign}, "
                                       f"monotone {verdict.monotone}"})
    return doc, failures


def cmd_verify(config: RunConfig) -> int:
    branch = _run_branch(config)
    h = config.config_hash()
    if branch.failure is not None:
        _emit({"error": {"code": 3, "kind": "solver", "detail": branch.failure, "config_hash": h}})
        return 3
    doc, failures = _verify_document(config, branch)
    path = os.path.join(config.out, "report.json")
    serialize.atomic_write(path, serialize.report_json(doc))
    outputs = [path]
    if doc["matching"] is not None or doc["outer"] is not None:
        fits = os.path.join(config.out, "fits.csv")
        serialize.atomic_write(fits, serialize.fit_table_csv(branch, doc, h))
        outputs.append(fits)
    if failures:
        _emit({"error": {"code": 4, "kind": "assertion", "failures": failures,
                         "config_hash": h, "outputs": outputs}})
        return 4
    _emit({"status": "ok", "config_hash": h, "outputs": outputs})
    return 0


_COMMANDS = {
    "branch": cmd_branch,
    "verify": cmd_verify,
    "spectrum": cmd_spectrum,
    "pohozaev": cmd_pohozaev,
}


def _parse_window(text: str):
    parts = text.split(",")
    try:
        a, b = (float(p) for p in parts)
    except ValueError:
        raise ConfigError(f"--window expects 'a,b', got {text!r}", ["window"]) from None
    return a, b


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mfelab",
        description="Blow-up branches of the singular mean field equation on the disk.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="path to a run config JSON")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--window", help="continuation window 'a,b' (overrides the config)")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        _apply_thread_limit()
        config = RunConfig.load(args.config)
        if args.out or args.window:
            raw = config.to_dict()
            if args.out:
                raw["out"] = args.out
            if args.window:
                a, b = _parse_window(args.window)
                raw["window"] = dict(raw["window"], start=a, end=b)
            config = RunConfig.from_dict(raw)
        return _COMMANDS[args.command](config)
    except (ConfigError, WeightSpecError, ParameterDomainError) as exc:
        _emit({"error": {"code": 2, "kind": type(exc).__name__, "message": str(exc),
                         "fields": getattr(exc, "fields", [])}})
        return 2
    except SolverError as exc:
        _emit({"error": {"code": 3, "kind": "SolverError", "message": str(exc)}})
        return 3
    except MfelabError as exc:
        _emit({"error": {"code": 3, "kind": type(exc).__name__, "message": str(exc)}})
        return 3


if __name__ == "__main__":
    sys.exit(main())
