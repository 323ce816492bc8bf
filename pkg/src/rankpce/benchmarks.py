"""Analytical test problems and the MSE-versus-budget convergence runner."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .baselines import BaselineConfig, lars_fit, omp_fit
from .basis import BasisSpec, build_design_system, design_matrix, sample_inputs
from .ranking import RankSolverConfig, noise_sensitivities, rank_pce_fit
from .regression import ElasticNetConfig

SOLVERS = ("rank", "omp", "lars")
DEFAULT_ND_GRID = tuple(range(5, 55, 5))

_ISHIGAMI_NORM = 9.0 + math.pi**4 / 5.0


def ishigami(x) -> np.ndarray | float:
    """Normalized Ishigami function on inputs already rescaled to [-1, 1]^3.

    Accepts a single point or an ``(N, 3)`` array.
    """
    x = np.asarray(x, dtype=float)
    x1, x2, x3 = np.pi * x[..., 0], np.pi * x[..., 1], np.pi * x[..., 2]
    y = 1.0 + (1.0 + np.pi**4 / 10.0 + np.sin(x1) + 7.0 * np.sin(x2) ** 2 + 0.1 * x3**4 * np.sin(x1)) / _ISHIGAMI_NORM
    return float(y) if y.ndim == 0 else y


def ackley(x) -> np.ndarray | float:
    """Ackley function on its native domain; global minimum 0 at the origin."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    y = (
        -20.0 * np.exp(-0.2 * np.sqrt(np.sum(x * x, axis=-1) / n))
        - np.exp(np.sum(np.cos(2.0 * np.pi * x), axis=-1) / n)
        + 20.0
        + np.e
    )
    return float(y) if y.ndim == 0 else y


@dataclass
class Problem:
    """A sampler/evaluator pair on the basis-native domain [-1, 1]^n."""

    name: str
    n_dims: int
    evaluate: Callable[[np.ndarray], np.ndarray]
    degree: int

    def spec(self, degree: int | None = None) -> BasisSpec:
        return BasisSpec.legendre(self.n_dims, self.degree if degree is None else degree)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(-1.0, 1.0, (n, self.n_dims))


def ishigami_problem() -> Problem:
    return Problem("ishigami", 3, ishigami, 10)


def ackley_problem(n_dims: int = 10) -> Problem:
    # uniform on [-5, 5]^n, rescaled to [-1, 1]^n
    return Problem("ackley", n_dims, lambda u: ackley(5.0 * np.asarray(u)), 8)


def planted_coefficients(spec: BasisSpec, sparsity: int, rng: np.random.Generator, low: float = 1.0, high: float = 2.0) -> np.ndarray:
    """Dense vector with ``sparsity`` random entries of magnitude in [low, high] and random sign."""
    c = np.zeros(spec.size)
    support = rng.choice(spec.size, size=sparsity, replace=False)
    c[support] = rng.uniform(low, high, sparsity) * rng.choice([-1.0, 1.0], sparsity)
    return c


def planted_problem(n_dims: int = 3, degree: int = 10, sparsity: int = 10, seed: int = 0) -> Problem:
    """Exactly representable sparse Legendre expansion with a fixed random spectrum."""
    spec = BasisSpec.legendre(n_dims, degree)
    c = planted_coefficients(spec, sparsity, np.random.default_rng(seed))
    support = np.flatnonzero(c)

    def evaluate(x):
        return design_matrix(spec, x, spec.indices[support]) @ c[support]

    prob = Problem("planted", n_dims, evaluate, degree)
    prob.coefficients = c
    return prob


PROBLEMS = {"ishigami": ishigami_problem, "ackley": ackley_problem, "planted": planted_problem}


def make_problem(name: str) -> Problem:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {', '.join(PROBLEMS)}") from None


@dataclass
class ConvergenceReport:
    """Test/train MSE per (solver, budget, seed) cell plus the full run config."""

    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("solver", "n_d", "seed", "mse_test", "mse_train", "runtime_ms")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for r in self.rows:
            writer.writerow([
                r["solver"], r["n_d"], r["seed"],
                repr(r["mse_test"]), repr(r["mse_train"]),
                "" if r["runtime_ms"] is None else f"{r['runtime_ms']:.3f}",
            ])
        return buf.getvalue()

    def manifest(self) -> str:
        return json.dumps(self.metadata, indent=2, sort_keys=True)

    def values(self, solver: str, n_d: int, key: str = "mse_test") -> np.ndarray:
        return np.array([r[key] for r in self.rows if r["solver"] == solver and r["n_d"] == n_d])

    def median(self, solver: str, n_d: int, key: str = "mse_test") -> float:
        return float(np.median(self.values(solver, n_d, key)))

    def summary(self) -> list[dict]:
        """Mean, median and spread across seeds for every (solver, n_d)."""
        out = []
        keys = sorted({(r["solver"], r["n_d"]) for r in self.rows}, key=lambda k: (SOLVERS.index(k[0]) if k[0] in SOLVERS else 99, k[1]))
        for solver, n_d in keys:
            v = self.values(solver, n_d)
            v = v[np.isfinite(v)]
            out.append({
                "solver": solver, "n_d": n_d,
                "mean": float(np.mean(v)) if v.size else float("nan"),
                "median": float(np.median(v)) if v.size else float("nan"),
                "std": float(np.std(v)) if v.size else float("nan"),
            })
        return out


def _mse(design, y, c) -> float:
    nz = np.flatnonzero(c)
    pred = design[:, nz] @ c[nz] if nz.size else np.zeros(len(y))
    return float(np.mean((y - pred) ** 2))


def run_seed(
    problem: Problem,
    seed: int,
    solvers: Sequence[str],
    nd_grid: Sequence[int],
    n_train: int,
    n_test: int,
    degree: int | None = None,
    rank_cfg: RankSolverConfig | None = None,
    tolerance: float = 1e-6,
    timing: bool = False,
) -> list[dict]:
    """All report rows of one replicate.

    Every solver runs once at the largest budget; smaller budgets are read
    off its path (the solvers are sequential, so the state after k steps is
    exactly the fit with budget k). Failures are recorded as NaN cells.
    """
    spec = problem.spec(degree)
    rng = np.random.default_rng(seed)
    X_train = problem.sample(rng, n_train)
    X_test = problem.sample(rng, n_test)
    train = build_design_system(spec, X_train, problem.evaluate(X_train))
    y_test = np.asarray(problem.evaluate(X_test), dtype=float)
    max_nd = max(nd_grid)
    rows = []
    for solver in solvers:
        t0 = time.perf_counter()
        try:
            if solver == "rank":
                base = rank_cfg or RankSolverConfig(enet=ElasticNetConfig(tolerance=tolerance))
                cfg = RankSolverConfig(
                    block_size=base.block_size, budget=max_nd, mc_y=base.mc_y, mc_x=base.mc_x,
                    seed=seed, enet=base.enet, stop_on_tolerance=False,
                )
                sens = noise_sensitivities(train, cfg, problem.sample)
                result = rank_pce_fit(train, cfg, problem.sample, sens)
                pick = lambda nd: result.coefficients_at(nd, cfg.block_size)
            elif solver in ("omp", "lars"):
                fit = omp_fit if solver == "omp" else lars_fit
                # budgets beyond the dictionary read off the end of the path
                result = fit(train, BaselineConfig(min(max_nd, train.n_terms), tolerance))
                pick = result.coefficients_at
            else:
                raise ValueError(f"unknown solver {solver!r}")
            error = None
        except Exception as exc:  # a failed cell must not stop the run
            error = f"{type(exc).__name__}: {exc}"
        elapsed = (time.perf_counter() - t0) * 1e3 if timing else None
        for nd in nd_grid:
            if error is None:
                c = pick(nd)
                nz = np.flatnonzero(c)
                pred = design_matrix(spec, X_test, spec.indices[nz]) @ c[nz] if nz.size else np.zeros(n_test)
                mse_test = float(np.mean((y_test - pred) ** 2))
                mse_train = _mse(train.design, train.y, c)
            else:
                mse_test = mse_train = float("nan")
            rows.append({
                "solver": solver, "n_d": int(nd), "seed": int(seed),
                "mse_test": mse_test, "mse_train": mse_train,
                "runtime_ms": elapsed, "error": error,
            })
    return rows


def run_convergence(
    problem: Problem,
    solvers: Sequence[str] = SOLVERS,
    nd_grid: Sequence[int] = DEFAULT_ND_GRID,
    n_train: int = 200,
    n_test: int = 2000,
    degree: int | None = None,
    seeds: Sequence[int] = tuple(range(10)),
    rank_cfg: RankSolverConfig | None = None,
    tolerance: float = 1e-6,
    timing: bool = False,
    jobs: int = 1,
) -> ConvergenceReport:
    """Held-out MSE of each solver over a budget grid, replicated over seeds.

    The report is a pure function of the arguments unless ``timing`` is on.
    With ``jobs > 1`` seeds run in worker processes; row order is unchanged.
    """
    nd_grid = sorted({int(v) for v in nd_grid})
    args = (solvers, nd_grid, n_train, n_test, degree, rank_cfg, tolerance, timing)
    if jobs > 1 and len(seeds) > 1 and problem.name in PROBLEMS:
        from concurrent.futures import ProcessPoolExecutor

        # workers rebuild registered problems by name; closures do not pickle
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_seed_star, [(problem.name, s, *args) for s in seeds]))
    else:
        parts = [run_seed(problem, s, *args) for s in seeds]
    rows = [r for part in parts for r in part]
    rc = rank_cfg or RankSolverConfig(enet=ElasticNetConfig(tolerance=tolerance))
    metadata = {
        "problem": problem.name,
        "n_dims": problem.n_dims,
        "degree": problem.degree if degree is None else degree,
        "dictionary_size": problem.spec(degree).size,
        "solvers": list(solvers),
        "nd_grid": list(nd_grid),
        "n_train": n_train,
        "n_test": n_test,
        "seeds": [int(s) for s in seeds],
        "tolerance": tolerance,
        "rank_solver": {**rc.to_dict(), "seed": "per replicate", "budget": "per cell", "stop_on_tolerance": False},
        "baseline": {"tolerance": tolerance},
        "failures": [
            {"solver": r["solver"], "n_d": r["n_d"], "seed": r["seed"], "error": r["error"]}
            for r in rows if r["error"] is not None
        ],
    }
    return ConvergenceReport(rows, metadata)


def _run_seed_star(packed):
    name, seed, *rest = packed
    return run_seed(make_problem(name), seed, *rest)
