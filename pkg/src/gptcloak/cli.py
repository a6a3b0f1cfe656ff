"""Command-line interface: ``gptcloak {gpts,design,extreme,verify,sweep}``.

Exit codes: 0 success, 1 numerical failure, 2 configuration error. Log
verbosity follows the ``GPTCLOAK_LOG`` environment variable (default WARNING).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from gptcloak import __version__
from gptcloak.cgpt_core import POLYNOMIAL_MAX_LAYERS, CgptError, calibrate_matrix_sign, cgpt
from gptcloak.checks import run_suite
from gptcloak.config import ConfigError, RunConfig, load_config, merge_point, parse_config, with_seed
from gptcloak.proportional import extreme_asymptotic, vandermonde_design_targets, xi_aggregates
from gptcloak.solver import (
    FixedCore,
    SolveReport,
    continuation_solve,
    picard_small_contrast,
    picard_small_core,
    solve_vanishing,
)
from gptcloak.structure import LayerStructure, StructureError, check_contrasts, proportional_radii, sigma_from_eta

log = logging.getLogger("gptcloak")

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2
GPTS_HEADER = ["n", "M_n_transfer", "M_n_poly", "M_n_matrix", "M_n_direct", "delta"]
GPTS_ROUTES = ("transfer", "polynomial", "matrix", "direct")


# ---------------------------------------------------------------------------
# deterministic serialization


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _to_json(obj: Any, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if obj is None or obj is True or obj is False:
        return {None: "null", True: "true", False: "false"}[obj]
    if isinstance(obj, (float, np.floating)):
        return format_float(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{_to_json(str(k), indent, 0)}: {_to_json(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{_to_json(v, indent, level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps_json(obj: Any) -> str:
    """JSON with every float written to 17 significant digits; non-finite values become null."""
    return _to_json(obj, 2, 0) + "\n"


def _csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format_float(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return str(v)


def csv_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buf.getvalue()


def _write(out: Path, name: str, text: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text)


def _structure_dict(s: LayerStructure) -> dict:
    return {"dimension": s.dimension, "radii": list(s.radii), "sigma_background": s.sigma_background}


# ---------------------------------------------------------------------------
# command bodies; each returns (report dict, files, ok)


def run_gpts(config: RunConfig, max_order: int | None) -> tuple[dict, dict[str, str], bool]:
    if config.structure is None or config.eta is None:
        raise ConfigError("gpts needs a structure block and an eta list")
    s = config.structure
    try:
        eta = check_contrasts(s, config.eta)
    except StructureError as exc:
        raise ConfigError(str(exc)) from exc
    K = s.n_coatings + 1 if max_order is None else max_order
    if K < 1:
        raise ConfigError("--max-order must be at least 1")
    poly_ok = s.dimension == 2 and s.n_layers <= POLYNOMIAL_MAX_LAYERS
    rows, table, failures = [], [], []
    for n in range(1, K + 1):
        values: dict[str, float | None] = {}
        for route in GPTS_ROUTES:
            if route == "polynomial" and not poly_ok:
                values[route] = None
                continue
            try:
                values[route] = cgpt(s, eta, n, route)
            except CgptError as exc:
                values[route] = None
                failures.append({"n": n, "route": route, "error": str(exc)})
        finite = [v for v in values.values() if v is not None]
        delta = (max(finite) - min(finite)) / s.cgpt_scale(n) if finite else None
        rows.append([n, *(values[r] for r in GPTS_ROUTES), delta])
        table.append({"n": n, "M_n": values, "scale": s.cgpt_scale(n), "delta": delta})
    report = {
        "structure": _structure_dict(s),
        "eta": list(eta),
        "max_order": K,
        "rows": table,
        "failures": failures,
        "signs": {"s": calibrate_matrix_sign(2), "s_tilde": calibrate_matrix_sign(3)},
    }
    return report, {"gpts.csv": csv_text(GPTS_HEADER, rows), "gpts.json": dumps_json(report)}, not failures


def sigma_profile(s: LayerStructure, sigma: Sequence[float] | None) -> list[list[float]]:
    """Step-function samples ``(r, sigma(r))`` from just outside ``r_1`` down to the centre."""
    if sigma is None:
        return []
    r = list(s.radii) + [0.0]
    rows = [[1.25 * s.r_outer, sigma[0]], [s.r_outer, sigma[0]]]
    for k in range(1, s.n_layers + 1):
        rows.append([r[k - 1], sigma[k]])
        rows.append([r[k], sigma[k]])
    return rows


def _solve_design(config: RunConfig) -> tuple[SolveReport, str]:
    s, core, method = config.structure, config.core, config.design.method
    if method == "picard-contrast":
        if config.design.f0 is None:
            raise ConfigError("design.f0 is required for picard-contrast")
        return picard_small_contrast(s, config.design.f0, config.solver), method
    if core is None:
        raise ConfigError("design needs a core block (eta or sigma)")
    if method == "picard-core":
        if core.eta is None:
            raise ConfigError("picard-core needs the core given as eta")
        return picard_small_core(s, core.eta, config.solver), method
    if method == "continuation":
        if core.eta is None:
            raise ConfigError("continuation needs the core given as eta")
        return continuation_solve(s, core.eta, config.solver), method
    report = solve_vanishing(s, core, config.solver)
    if method == "auto" and not report.converged:
        target = core.eta if core.eta is not None else (-1.0 if core.sigma == 0.0 else None)
        if target is not None and -1.0 <= target <= 0.0:
            log.info("direct Newton failed (%s); falling back to continuation", report.status)
            return continuation_solve(s, target, config.solver), "continuation"
    return report, "newton"


def run_design(config: RunConfig) -> tuple[dict, dict[str, str], bool]:
    if config.structure is None:
        raise ConfigError("design needs a structure block")
    try:
        report, method = _solve_design(config)
    except StructureError as exc:
        raise ConfigError(str(exc)) from exc
    out = {"structure": _structure_dict(config.structure), "method": method, **report.to_dict()}
    files = {
        "design.json": dumps_json(out),
        "profile.csv": csv_text(["r", "sigma"], sigma_profile(config.structure, report.sigma)),
    }
    return out, files, report.converged


def _reference_comparison(eta: np.ndarray, sigma: list[float] | None, opts) -> dict:
    out: dict[str, Any] = {}
    if opts.reference_eta is not None:
        ref = np.asarray(opts.reference_eta)
        out["eta_abs_diff"] = list(np.abs(eta[: ref.size] - ref))
    if opts.reference_sigma is not None and sigma is not None:
        ref = np.asarray(opts.reference_sigma)
        got = np.asarray(sigma[1 : 1 + ref.size])
        out["sigma_rel_diff"] = list(np.abs(got - ref) / np.abs(ref))
    if opts.reference_eta is not None and opts.reference_sigma is not None:
        # the two reference lists should describe the same design
        ref_eta = np.asarray(opts.reference_eta)
        implied = np.asarray(sigma_from_eta(ref_eta, 1.0)[1:])
        m = min(implied.size, len(opts.reference_sigma))
        rel = np.abs(implied[:m] - np.asarray(opts.reference_sigma[:m])) / np.abs(np.asarray(opts.reference_sigma[:m]))
        out["sigma_implied_by_reference_eta"] = list(implied[:m])
        out["inconsistent_reference_entries"] = [int(i) + 1 for i in np.nonzero(rel > 0.01)[0]]
    return out


def run_extreme(config: RunConfig, n_coatings: int | None, delta: float | None) -> tuple[dict, dict[str, str], bool]:
    opts = config.extreme
    N = opts.n_coatings if n_coatings is None else n_coatings
    d = opts.delta if delta is None else delta
    if N < 1 or not d > 0:
        raise ConfigError("extreme needs n_coatings >= 1 and delta > 0")
    s = LayerStructure(2, proportional_radii(opts.r_inner, 1.0 + d, N))
    cont = continuation_solve(s, -1.0, config.solver)
    newton = solve_vanishing(s, FixedCore(eta=-1.0), config.solver, init=np.asarray(extreme_asymptotic(N, d)))
    best = cont if cont.converged else newton
    asym = np.asarray(extreme_asymptotic(N, d))
    eta = best.eta
    out = {
        "n_coatings": N,
        "delta": d,
        "structure": _structure_dict(s),
        "converged": best.converged,
        "status": {"continuation": cont.status, "newton_asymptotic_init": newton.status},
        "eta": list(eta),
        "sigma": best.sigma,
        "eta_asymptotic": list(asym),
        "deviation_from_asymptotic": list(np.abs(eta[:N] - asym)),
        "solver_agreement": float(np.max(np.abs(cont.eta - newton.eta))),
        "xi_target_mismatch": float(np.max(np.abs(xi_aggregates(eta) - vandermonde_design_targets(s)))),
        "max_residual": best.max_residual,
        "backward_error": best.cross_check.get("backward"),
        "reference": _reference_comparison(eta, best.sigma, opts),
    }
    files = {
        "extreme.json": dumps_json(out),
        "profile.csv": csv_text(["r", "sigma"], sigma_profile(s, best.sigma)),
    }
    return out, files, best.converged


def run_verify(config: RunConfig) -> tuple[dict, dict[str, str], bool]:
    report = run_suite(seed=config.solver.seed, samples=config.verify.samples, mutate=config.verify.mutate)
    return report, {"verify.json": dumps_json(report)}, report["passed"]


def _sweep_worker(args: tuple[str, dict, int | None]) -> tuple[dict, bool]:
    command, raw, max_order = args
    try:
        config = parse_config(raw)
        if command == "gpts":
            report, _, ok = run_gpts(config, max_order)
        else:
            report, _, ok = run_design(config)
    except ConfigError as exc:
        return {"config_error": str(exc)}, False
    return report, ok


def run_sweep(raw: dict, config: RunConfig, max_order: int | None) -> tuple[dict, dict[str, str], bool]:
    opts = config.sweep
    if not opts.points:
        raise ConfigError("sweep needs a non-empty sweep.points list")
    jobs = [(opts.command, merge_point(raw, p), max_order) for p in opts.points]
    for _, point_raw, _ in jobs:
        parse_config(point_raw)  # fail fast on configuration errors
    if opts.workers > 1:
        with ProcessPoolExecutor(max_workers=opts.workers) as pool:
            results = list(pool.map(_sweep_worker, jobs))  # map keeps input order
    else:
        results = [_sweep_worker(j) for j in jobs]
    rows = []
    for i, (rep, ok) in enumerate(results):
        if opts.command == "gpts":
            deltas = [r["delta"] for r in rep.get("rows", []) if r["delta"] is not None]
            rows.append([i, ok, max(deltas) if deltas else None])
        else:
            rows.append([i, ok, rep.get("status"), rep.get("max_residual")])
    header = ["index", "ok", "max_delta"] if opts.command == "gpts" else ["index", "ok", "status", "max_residual"]
    out = {"command": opts.command, "points": [rep for rep, _ in results], "ok": [ok for _, ok in results]}
    return out, {"sweep.json": dumps_json(out), "sweep.csv": csv_text(header, rows)}, all(ok for _, ok in results)


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gptcloak", description="Design and verify GPT-vanishing layered inclusions.")
    parser.add_argument("--version", action="version", version=f"gptcloak {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--out", default=".", help="output directory (default: current directory)")
        p.add_argument("--seed", type=int, help="override solver.seed")

    p = sub.add_parser("gpts", help="CGPTs of a structure by every route")
    common(p)
    p.add_argument("--max-order", type=int, help="highest order K (default N+1)")
    p = sub.add_parser("design", help="solve for coatings with M_1..M_N = 0")
    common(p)
    p = sub.add_parser("extreme", help="thin-coating design on proportional radii")
    common(p)
    p.add_argument("--coatings", type=int, help="number of coatings N")
    p.add_argument("--delta", type=float, help="growth factor minus one")
    p = sub.add_parser("verify", help="randomized property suite")
    common(p)
    p.add_argument("--mutate", choices=("none", "matrix-sign"), help="inject a known bug (sanity check)")
    p = sub.add_parser("sweep", help="run design or gpts over a list of config points")
    common(p)
    p.add_argument("--max-order", type=int, help="highest order K for gpts sweeps")
    return parser


def _configure_logging() -> None:
    level = os.environ.get("GPTCLOAK_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        config = with_seed(load_config(args.config), args.seed)
        if args.command == "gpts":
            report, files, ok = run_gpts(config, args.max_order)
        elif args.command == "design":
            report, files, ok = run_design(config)
        elif args.command == "extreme":
            report, files, ok = run_extreme(config, args.coatings, args.delta)
        elif args.command == "verify":
            if args.mutate is not None:
                config = replace(config, verify=replace(config.verify, mutate=args.mutate))
            report, files, ok = run_verify(config)
        else:
            raw = yaml.safe_load(Path(args.config).read_text()) if args.config else {}
            report, files, ok = run_sweep(raw, config, args.max_order)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for name, text in files.items():
        _write(out, name, text)
    summary = ", ".join(sorted(files))
    print(f"{args.command}: {'ok' if ok else 'FAILED'} ({summary} in {out})")
    return EXIT_OK if ok else EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
