"""Command-line front end.

Subcommands: ``fit``, ``predict``, ``sensitivity``, ``benchmark``, ``field``
and ``rerun``. Each run writes its outputs plus ``manifest.json`` (the full
resolved configuration) into ``--out``. Outputs carry no timestamps, so
repeating a run with the same flags reproduces them byte for byte.

Exit codes: 0 success, 1 solver/runtime failure, 2 input error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import BaselineConfig, lars_fit, omp_fit
from .basis import build_design_system, sample_inputs
from .benchmarks import DEFAULT_ND_GRID, PROBLEMS, SOLVERS, make_problem, run_convergence
from .data import DataError, Schema, load_csv
from .fields import RandomFieldSpec, energy_fraction, kl_decompose, realize_field
from .model import PceModel
from .ranking import RankSolverConfig, diagnostics_rows, rank_pce_fit
from .regression import ElasticNetConfig, coordinate_descent, cross_validate, descend
from .stats import sensitivity_report

log = logging.getLogger("rankpce")

EXIT_OK, EXIT_FAILURE, EXIT_INPUT = 0, 1, 2
FIT_SOLVERS = ("rank", "enet", "omp", "lars")


class InputError(Exception):
    """Bad flags or unreadable input; maps to exit code 2."""


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest(args) -> dict:
    skip = {"func", "manifest", "verbose"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return {"tool": "rankpce", "version": __version__, "command": args.command, "args": cfg}


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


# ---------------------------------------------------------------- fit

def _load_schema(path) -> Schema:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"schema file not found: {p}")
    return Schema.load(p)


def _load_model(path) -> PceModel:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"model file not found: {p}")
    try:
        return PceModel.from_json(p.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{p}: not a valid model file ({exc})") from None


def _solve(system, args, enet: ElasticNetConfig):
    """Dense coefficients plus the fitted model and rank history (if any)."""
    n_d = min(args.n_d, system.n_terms) if args.solver == "rank" else args.n_d
    if args.solver in ("omp", "lars") and n_d > system.n_terms:
        raise InputError(f"--n-d {n_d} exceeds the dictionary size {system.n_terms}")
    if args.solver == "rank":
        cfg = RankSolverConfig(args.block_size, n_d, args.mc_y, args.mc_x, args.seed, enet)
        sampler = lambda rng, n: sample_inputs(system.spec, n, rng)
        res = rank_pce_fit(system, cfg, sampler)
        return res.model, res.history
    if args.solver == "enet":
        return coordinate_descent(system, enet), None
    fit = omp_fit if args.solver == "omp" else lars_fit
    return fit(system, BaselineConfig(n_d, enet.tolerance)).model, None


def cmd_fit(args) -> int:
    schema = _load_schema(args.schema)
    if not Path(args.dataset).is_file():
        raise InputError(f"dataset file not found: {args.dataset}")
    ds = load_csv(args.dataset, schema, args.qoi, normalize=not args.no_normalize)
    spec = schema.basis(args.degree)
    system = build_design_system(spec, ds.X, ds.y_normalized)
    l1, l2 = args.lambda1, args.lambda2
    if args.cv:
        if args.solver not in ("rank", "enet"):
            raise InputError("--cv applies to the rank and enet solvers only")
        base = ElasticNetConfig(tolerance=args.tolerance)
        fit = None
        if args.solver == "rank":
            def fit(sub, cfg):
                rc = RankSolverConfig(args.block_size, min(args.n_d, sub.n_terms), args.mc_y, args.mc_x, args.seed, cfg)
                return rank_pce_fit(sub, rc, lambda rng, n: sample_inputs(spec, n, rng)).model.dense()
        l1, l2 = cross_validate(system, args.folds, seed=args.seed, base=base, fit=fit)
    enet = ElasticNetConfig(l1, l2, args.tolerance)
    model, history = _solve(system, args, enet)
    model.y_scale = ds.y_scale
    model.variables = [v.to_dict() for v in ds.variables]

    out = _outdir(args)
    (out / "model.json").write_text(model.to_json(indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if history is not None:
        rows = diagnostics_rows(spec, history)
        cols = ("iteration", "multi_index", "V", "sigma_y", "sigma_x", "rank", "selected")
        _write_csv(out / "diagnostics.csv", cols, [[repr(r[c]) if isinstance(r[c], float) else r[c] for c in cols] for r in rows])
    pred = model.predict(ds.X)
    summary = {
        "solver": args.solver,
        "n_samples": ds.n_samples,
        "dictionary_size": spec.size,
        "n_nonzero": model.n_nonzero,
        "lambda1": l1,
        "lambda2": l2,
        "y_scale": ds.y_scale,
        "train_mse_normalized": float(np.mean((system.y - pred) ** 2)),
        "final_objective": model.final_objective,
        "converged": bool(model.converged),
    }
    _dump_json(summary, out / "summary.json")
    _dump_json(_manifest(args), out / "manifest.json")
    log.info("fitted %d of %d terms", model.n_nonzero, spec.size)
    return EXIT_OK


# ---------------------------------------------------------------- predict

def cmd_predict(args) -> int:
    model = _load_model(args.model)
    if not model.variables:
        raise InputError(f"{args.model}: model has no variable schema; refit it with the CLI")
    schema = Schema.from_dict({"variables": model.variables})
    if not Path(args.dataset).is_file():
        raise InputError(f"dataset file not found: {args.dataset}")
    ds = load_csv(args.dataset, schema, normalize=False, require_qoi=False)
    pred = model.predict(ds.X, denormalize=True)
    out = _outdir(args)
    _write_csv(out / "predictions.csv", ["prediction"], [[repr(float(v))] for v in pred])
    _dump_json(_manifest(args), out / "manifest.json")
    return EXIT_OK


# ---------------------------------------------------------------- sensitivity

def cmd_sensitivity(args) -> int:
    model = _load_model(args.model)
    if args.max_order < 1:
        raise InputError("--max-order must be at least 1")
    report = sensitivity_report(model, args.max_order, total=args.total)
    out = _outdir(args)
    d = report.to_dict()
    d["note"] = "moments are in the normalized QoI scale; multiply the mean by y_scale and the variances by y_scale**2"
    d["y_scale"] = model.y_scale
    _dump_json(d, out / "sensitivity.json")
    _dump_json(_manifest(args), out / "manifest.json")
    return EXIT_OK


# ---------------------------------------------------------------- benchmark

def cmd_benchmark(args) -> int:
    if args.problem not in PROBLEMS:
        raise InputError(f"unknown problem {args.problem!r}; choose from {', '.join(PROBLEMS)}")
    bad = [s for s in args.solvers if s not in SOLVERS]
    if bad:
        raise InputError(f"unknown solver(s) {', '.join(bad)}; choose from {', '.join(SOLVERS)}")
    if not args.nd_grid or min(args.nd_grid) < 1:
        raise InputError("--nd-grid needs positive budgets")
    problem = make_problem(args.problem)
    degree = args.degree if args.degree is not None else problem.degree
    size = problem.spec(degree).size
    if max(args.nd_grid) > size:
        raise InputError(f"--nd-grid entry {max(args.nd_grid)} exceeds the dictionary size {size}")
    rank_cfg = RankSolverConfig(
        block_size=args.block_size, mc_y=args.mc_y, mc_x=args.mc_x,
        enet=ElasticNetConfig(args.lambda1, args.lambda2, args.tolerance),
    )
    seeds = list(range(args.seed, args.seed + args.seeds))
    report = run_convergence(
        problem, args.solvers, args.nd_grid, args.n_train, args.n_test, degree,
        seeds, rank_cfg, args.tolerance, args.timing, args.jobs,
    )
    out = _outdir(args)
    (out / "report.csv").write_text(report.to_csv(), encoding="utf-8")
    _dump_json(report.summary(), out / "summary.json")
    manifest = _manifest(args)
    manifest["run"] = report.metadata
    _dump_json(manifest, out / "manifest.json")
    if report.metadata["failures"]:
        log.warning("%d failed cells, see manifest.json", len(report.metadata["failures"]))
    return EXIT_OK


# ---------------------------------------------------------------- field

def cmd_field(args) -> int:
    if args.nx * args.ny > args.max_cells:
        raise InputError(f"grid {args.nx}x{args.ny} exceeds the cap of {args.max_cells} cells (raise --max-cells)")
    try:
        spec = RandomFieldSpec(args.nx, args.ny, args.length, args.corr_length, args.n_kl)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    basis = kl_decompose(spec)
    lam = basis.eigenvalues
    c1, c2 = np.cumsum(lam), np.cumsum(lam**2)
    out = _outdir(args)
    _write_csv(
        out / "spectrum.csv",
        ["mode", "eigenvalue", "energy_linear", "energy_squared"],
        [[k + 1, repr(float(lam[k])), repr(float(c1[k] / c1[-1])), repr(float(c2[k] / c2[-1]))] for k in range(len(lam))],
    )
    rng = np.random.default_rng(args.seed)
    for i in range(args.count):
        theta = rng.standard_normal(spec.n_kl)
        field = realize_field(basis, theta, sqrt_eigenvalues=not args.literal_weights)
        np.savetxt(out / f"field_{i:03d}.txt", field, fmt="%.17g")
    summary = {
        "trace": float(lam.sum()),
        "n_cells": spec.n_cells,
        "energy": {
            str(n): {"linear": energy_fraction(basis, n, 1), "squared": energy_fraction(basis, n, 2)}
            for n in sorted({min(v, len(lam)) for v in (5, 15, 45, spec.n_kl)})
        },
    }
    _dump_json(summary, out / "summary.json")
    _dump_json(_manifest(args), out / "manifest.json")
    return EXIT_OK


# ---------------------------------------------------------------- rerun

def cmd_rerun(args) -> int:
    p = Path(args.manifest)
    if not p.is_file():
        raise InputError(f"manifest file not found: {p}")
    try:
        m = json.loads(p.read_text(encoding="utf-8"))
        command, recorded = m["command"], dict(m["args"])
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise InputError(f"{p}: not a valid manifest ({exc})") from None
    if command not in COMMANDS or command == "rerun":
        raise InputError(f"{p}: cannot rerun command {command!r}")
    if args.out is not None:
        recorded["out"] = args.out
    ns = argparse.Namespace(**recorded)
    ns.command = command
    return COMMANDS[command](ns)


COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "sensitivity": cmd_sensitivity,
    "benchmark": cmd_benchmark,
    "field": cmd_field,
    "rerun": cmd_rerun,
}


def _solver_flags(p, block_default=5):
    p.add_argument("--block-size", type=int, default=block_default, help="rank solver block size N_B")
    p.add_argument("--lambda1", type=float, default=0.0)
    p.add_argument("--lambda2", type=float, default=0.0)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--mc-y", type=int, default=32, help="Monte-Carlo draws for the output sensitivity")
    p.add_argument("--mc-x", type=int, default=32, help="Monte-Carlo draws for the location sensitivity")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rankpce", description="Sparse polynomial chaos surrogates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a surrogate to a CSV dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--schema", required=True, help="JSON variable schema")
    p.add_argument("--qoi", help="QoI column (overrides the schema)")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--solver", choices=FIT_SOLVERS, default="rank")
    p.add_argument("--n-d", type=int, default=50, help="coefficient budget")
    _solver_flags(p)
    p.add_argument("--cv", action="store_true", help="choose lambda1/lambda2 by k-fold CV")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-normalize", action="store_true", help="fit the raw QoI")
    p.add_argument("--out", required=True)

    p = sub.add_parser("predict", help="evaluate a fitted model on new inputs")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("sensitivity", help="moments and Sobol indices of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--max-order", type=int, default=3)
    p.add_argument("--total", action="store_true", help="also report total-effect indices")
    p.add_argument("--out", required=True)

    p = sub.add_parser("benchmark", help="MSE versus budget on an analytical problem")
    p.add_argument("--problem", required=True, help=f"one of {', '.join(PROBLEMS)}")
    p.add_argument("--solvers", type=_str_list, default=list(SOLVERS))
    p.add_argument("--nd-grid", type=_int_list, default=list(DEFAULT_ND_GRID))
    p.add_argument("--n-train", type=int, default=200)
    p.add_argument("--n-test", type=int, default=2000)
    p.add_argument("--degree", type=int, default=None)
    p.add_argument("--seeds", type=int, default=10, help="number of replicates")
    p.add_argument("--seed", type=int, default=0, help="first replicate seed")
    _solver_flags(p)
    p.add_argument("--timing", action="store_true", help="record runtimes (outputs stop being reproducible)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("field", help="KL spectrum and random-field realizations")
    p.add_argument("--nx", type=int, default=64)
    p.add_argument("--ny", type=int, default=64)
    p.add_argument("--length", type=float, default=640.0)
    p.add_argument("--corr-length", type=float, default=160.0)
    p.add_argument("--n-kl", type=int, default=45)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--literal-weights", action="store_true", help="weight modes by eigenvalues, not their square roots")
    p.add_argument("--max-cells", type=int, default=128 * 128)
    p.add_argument("--out", required=True)

    p = sub.add_parser("rerun", help="repeat a run from its manifest.json")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", default=None, help="write to a different directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="rankpce: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InputError, DataError, FileNotFoundError) as exc:
        print(f"rankpce: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as exc:  # solver/runtime failure
        print(f"rankpce: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
