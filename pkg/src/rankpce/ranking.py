"""Signal-to-noise ranking of basis functions and the ranking-driven block solver.

Each basis function A is scored by its correlation with the current residual,
``V_A = (1/N) sum_i eta_i p_A(x_i)``, divided by two Monte-Carlo noise
sensitivities:

* ``sigma_y``: spread of ``V_A`` when the QoI values get unit Gaussian noise
* ``sigma_x``: spread of the diagonal Gram entry ``M_AA`` around 1 when the
  N sample locations are redrawn from the input distribution

The score is ``r_A = |V_A| / (H * sqrt(sigma_y**2 + sigma_x**2))`` with
``H = (min|V| + max|V|) / 2``. The solver repeatedly ranks, takes the
``block_size`` best-ranked functions and runs coordinate descent on them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .basis import BasisSpec, DesignSystem, design_matrix, sample_inputs
from .model import PceModel
from .regression import ElasticNetConfig, _objective_from_residual, _penalty_weights, descend

Sampler = Callable[[np.random.Generator, int], np.ndarray]

# resampled points per block when accumulating diagonal Gram entries
_SIGMA_X_BLOCK = 512


@dataclass(frozen=True)
class RankSolverConfig:
    """Settings of the ranking solver.

    ``budget`` is the number of selection slots N_D; the solver runs at most
    ``ceil(budget / block_size)`` ranking iterations. Set
    ``stop_on_tolerance=False`` to always spend the whole budget.
    """

    block_size: int = 5
    budget: int = 50
    mc_y: int = 32
    mc_x: int = 32
    seed: int = 0
    enet: ElasticNetConfig = field(default_factory=ElasticNetConfig)
    stop_on_tolerance: bool = True

    def __post_init__(self):
        if self.block_size < 1 or self.budget < 1:
            raise ValueError("block_size and budget must be positive")
        if self.mc_y < 2 or self.mc_x < 2:
            raise ValueError("need at least 2 Monte-Carlo realizations")

    @property
    def iterations(self) -> int:
        return math.ceil(self.budget / self.block_size)

    def to_dict(self) -> dict:
        return {
            "block_size": self.block_size,
            "budget": self.budget,
            "mc_y": self.mc_y,
            "mc_x": self.mc_x,
            "seed": self.seed,
            "enet": self.enet.to_dict(),
            "stop_on_tolerance": self.stop_on_tolerance,
        }


@dataclass
class RankingDiagnostics:
    """Ranking state of one solver iteration."""

    moment: np.ndarray
    sigma_y: np.ndarray
    sigma_x: np.ndarray
    H: float
    ranks: np.ndarray
    selected: np.ndarray
    objective: float | None = None


def moment_vector(residual, design) -> np.ndarray:
    """Correlations ``V_A = (1/N) sum_i residual_i * p_A(x_i)``."""
    residual = np.asarray(residual, dtype=float)
    design = np.asarray(design, dtype=float)
    if design.shape[0] != residual.shape[0]:
        raise ValueError("residual length does not match the design rows")
    return design.T @ residual / len(residual)


def sigma_y(design, n_realizations: int, rng: np.random.Generator) -> np.ndarray:
    """Sensitivity of each correlation to unit Gaussian noise on the QoI.

    ``U_A - V_A = (1/N) sum_i theta_i p_A(x_i)`` does not involve the QoI, so
    the result depends only on the design points and the noise draws.
    """
    design = np.asarray(design, dtype=float)
    n = design.shape[0]
    theta = rng.standard_normal((n, n_realizations))
    shifts = design.T @ theta / n
    return np.sqrt(np.mean(shifts * shifts, axis=1))


def sigma_x(
    spec: BasisSpec,
    n_samples: int,
    n_realizations: int,
    rng: np.random.Generator,
    sampler: Sampler | None = None,
) -> np.ndarray:
    """Sensitivity of each diagonal Gram entry to the sample locations.

    For each realization a fresh set of ``n_samples`` points is drawn and
    ``M_AA = (1/N) sum_i p_A(x_i)**2`` formed; the result is the RMS of
    ``M_AA - 1`` over realizations.
    """
    sampler = (lambda g, n: sample_inputs(spec, n, g)) if sampler is None else sampler
    acc = np.zeros(spec.size)
    for _ in range(n_realizations):
        X = np.asarray(sampler(rng, n_samples), dtype=float)
        diag = np.zeros(spec.size)
        for start in range(0, n_samples, _SIGMA_X_BLOCK):
            diag += design_matrix(spec, X[start:start + _SIGMA_X_BLOCK], squared=True).sum(axis=0)
        dev = diag / n_samples - 1.0
        acc += dev * dev
    return np.sqrt(acc / n_realizations)


def rank_coefficients(V, sig_y, sig_x) -> tuple[float, np.ndarray]:
    """Normalization ``H`` and ranking scores for correlation vector ``V``.

    All-zero ``V`` gives ``H = 0`` and all ranks 0. A function with zero
    noise and non-zero correlation ranks ``+inf``.
    """
    absV = np.abs(np.asarray(V, dtype=float))
    sig_y = np.asarray(sig_y, dtype=float)
    sig_x = np.asarray(sig_x, dtype=float)
    if not (absV.shape == sig_y.shape == sig_x.shape):
        raise ValueError("V, sigma_y and sigma_x must have equal length")
    H = 0.5 * (absV.min() + absV.max()) if absV.size else 0.0
    if H == 0.0:
        return 0.0, np.zeros_like(absV)
    noise = np.sqrt(sig_y * sig_y + sig_x * sig_x)
    with np.errstate(divide="ignore", invalid="ignore"):
        ranks = absV / (H * noise)
    ranks[(noise == 0.0) & (absV == 0.0)] = 0.0
    return float(H), ranks


def select_top(ranks, count: int) -> np.ndarray:
    """Positions of the ``count`` highest ranks; ties keep dictionary order."""
    order = np.argsort(-np.asarray(ranks), kind="stable")
    return np.sort(order[:count])


@dataclass
class RankFitResult:
    """Model, per-iteration diagnostics and coefficient snapshots of a fit.

    ``snapshots[k]`` holds the dense coefficients after ``k + 1`` ranking
    iterations, i.e. the state at budget ``(k + 1) * block_size``.
    """

    model: PceModel
    history: list
    snapshots: list
    sigma_y: np.ndarray
    sigma_x: np.ndarray

    def coefficients_at(self, budget: int, block_size: int) -> np.ndarray:
        k = math.ceil(budget / block_size)
        if not self.snapshots:
            return np.zeros(self.model.spec.size)
        return self.snapshots[min(k, len(self.snapshots)) - 1]


def noise_sensitivities(system: DesignSystem, cfg: RankSolverConfig, sampler: Sampler | None = None):
    """``(sigma_y, sigma_x)`` for ``system`` with seeds derived from ``cfg.seed``."""
    seq_y, seq_x = np.random.SeedSequence(cfg.seed).spawn(2)
    sy = sigma_y(system.design, cfg.mc_y, np.random.default_rng(seq_y))
    sx = sigma_x(system.spec, system.n_samples, cfg.mc_x, np.random.default_rng(seq_x), sampler)
    return sy, sx


def rank_pce_fit(
    system: DesignSystem,
    cfg: RankSolverConfig,
    sampler: Sampler | None = None,
    sensitivities: tuple[np.ndarray, np.ndarray] | None = None,
) -> RankFitResult:
    """Fit a sparse PCE with the ranking-based block coordinate descent solver.

    Starting from ``c = 0`` and residual ``eta = y``, every iteration ranks
    all basis functions against ``eta``, picks the ``block_size`` best
    (earlier picks may be picked again) and minimizes the Elastic Net loss
    over them with the rest held fixed. The loop ends when the budget is
    spent, when the residual has no correlation left, or, with
    ``stop_on_tolerance``, when an iteration lowers the loss by at most
    ``cfg.enet.tolerance``.

    Parameters
    ----------
    system : DesignSystem
        Training data; inputs must follow the measure the basis is
        orthonormal for (transform them first if they do not).
    cfg : RankSolverConfig
    sampler : callable, optional
        ``sampler(rng, n)`` drawing ``n`` input points for the location
        sensitivity; defaults to the basis' own product measure.
    sensitivities : tuple of ndarray, optional
        Precomputed ``(sigma_y, sigma_x)``; they depend only on the design
        points, so repeated fits on one design can share them.
    """
    sy, sx = noise_sensitivities(system, cfg, sampler) if sensitivities is None else sensitivities
    design, y = system.design, system.y
    enet = cfg.enet
    weights = _penalty_weights(system.n_terms, enet)
    col_sq = system.column_sq_norms

    c = np.zeros(system.n_terms)
    eta = y.copy()
    loss = _objective_from_residual(eta, c, weights, enet)
    trace = [loss]
    history, snapshots = [], []
    converged = True
    count = min(cfg.block_size, system.n_terms)

    for _ in range(cfg.iterations):
        V = moment_vector(eta, design)
        H, ranks = rank_coefficients(V, sy, sx)
        if H == 0.0:
            history.append(RankingDiagnostics(V, sy, sx, H, ranks, np.array([], dtype=int), loss))
            break
        selected = select_top(ranks, count)
        res = descend(design, y, enet, c, selected, col_sq)
        converged = converged and res.converged
        c, eta = res.coefficients, res.residual
        new_loss = _objective_from_residual(eta, c, weights, enet)
        history.append(RankingDiagnostics(V, sy, sx, H, ranks, selected, new_loss))
        snapshots.append(c.copy())
        trace.append(new_loss)
        gain = loss - new_loss
        loss = new_loss
        if cfg.stop_on_tolerance and gain <= enet.tolerance:
            break

    model = PceModel.from_dense(
        system.spec,
        c,
        solver="rank",
        objective_trace=trace,
        config=cfg.to_dict(),
        converged=converged,
    )
    return RankFitResult(model, history, snapshots, sy, sx)


def diagnostics_rows(spec: BasisSpec, history) -> list[dict]:
    """Flatten a fit history into one row per (iteration, multi-index)."""
    rows = []
    for it, diag in enumerate(history):
        chosen = np.zeros(len(diag.moment), dtype=bool)
        chosen[diag.selected] = True
        for j, alpha in enumerate(spec.indices):
            rows.append(
                {
                    "iteration": it,
                    "multi_index": "-".join(str(int(a)) for a in alpha),
                    "V": float(diag.moment[j]),
                    "sigma_y": float(diag.sigma_y[j]),
                    "sigma_x": float(diag.sigma_x[j]),
                    "rank": float(diag.ranks[j]),
                    "selected": int(chosen[j]),
                }
            )
    return rows
