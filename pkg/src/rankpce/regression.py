"""Elastic Net fitting of PCE coefficients by cyclic coordinate descent.

The loss is the plain mean-square error (1/N scaling, not 1/(2N)) plus
``lambda1 * sum|c| + lambda2 * sum c**2``, so the one-dimensional minimizer is
``S(z, lambda1) / (a + 2*lambda2)`` with ``z = (2/N) sum r_i p_k(x_i)`` and
``a = (2/N) sum p_k(x_i)**2``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

from .basis import DesignSystem
from .model import PceModel


@dataclass(frozen=True)
class ElasticNetConfig:
    """Regularization strengths and stopping rule for coordinate descent.

    ``tolerance`` bounds the objective decrease over one full sweep; the
    solver stops once a sweep gains less than that. With
    ``penalize_constant=False`` the constant polynomial is left unpenalized.
    """

    lambda1: float = 0.0
    lambda2: float = 0.0
    tolerance: float = 1e-6
    max_sweeps: int = 1000
    penalize_constant: bool = True

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("regularization strengths must be non-negative")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def soft_threshold(z: float, t: float) -> float:
    return float(np.sign(z) * max(abs(z) - t, 0.0))


def _penalty_weights(n_terms: int, cfg: ElasticNetConfig) -> np.ndarray:
    w = np.ones(n_terms)
    if not cfg.penalize_constant and n_terms:
        w[0] = 0.0
    return w


def _objective_from_residual(r, c, weights, cfg) -> float:
    return float(
        np.mean(r * r)
        + cfg.lambda1 * np.sum(weights * np.abs(c))
        + cfg.lambda2 * np.sum(weights * c * c)
    )


def objective(c, system: DesignSystem, cfg: ElasticNetConfig) -> float:
    """Regularized loss ``MSE(c) + lambda1*|c|_1 + lambda2*|c|_2^2``."""
    c = np.asarray(c, dtype=float)
    if c.shape != (system.n_terms,):
        raise ValueError(f"expected {system.n_terms} coefficients, got {c.shape}")
    r = system.y - system.design @ c
    return _objective_from_residual(r, c, _penalty_weights(len(c), cfg), cfg)


def coordinate_update(column, partial_residual, cfg: ElasticNetConfig, *, penalize: bool = True) -> float:
    """Exact minimizer of the loss along one coordinate.

    ``partial_residual`` must exclude the coordinate's own contribution.
    A zero column with ``lambda2 == 0`` has no unique minimizer; the
    coefficient is then forced to 0.
    """
    column = np.asarray(column, dtype=float)
    r = np.asarray(partial_residual, dtype=float)
    n = len(r)
    z = 2.0 / n * float(column @ r)
    a = 2.0 / n * float(column @ column)
    l1, l2 = (cfg.lambda1, cfg.lambda2) if penalize else (0.0, 0.0)
    denom = a + 2.0 * l2
    if denom <= 0.0:
        return 0.0
    return soft_threshold(z, l1) / denom


def _residual(design, y, c):
    nz = np.flatnonzero(c)
    return y - design[:, nz] @ c[nz] if len(nz) < len(c) // 4 else y - design @ c


@dataclass
class DescentResult:
    coefficients: np.ndarray
    residual: np.ndarray
    objective_trace: list
    converged: bool
    sweeps: int


def descend(
    design: np.ndarray,
    y: np.ndarray,
    cfg: ElasticNetConfig,
    coefficients=None,
    active: Sequence[int] | None = None,
    col_sq: np.ndarray | None = None,
) -> DescentResult:
    """Cyclic coordinate descent over ``active`` with the other coefficients fixed.

    This is the array-level worker behind :func:`coordinate_descent` and the
    block solves of the ranking solver. ``coefficients`` is the warm start and
    is not modified. ``col_sq`` may supply precomputed ``(1/N) sum p_k^2``.
    """
    n, d = design.shape
    c = np.zeros(d) if coefficients is None else np.array(coefficients, dtype=float)
    active = np.arange(d) if active is None else np.asarray(active, dtype=int)
    if col_sq is None:
        col_sq = np.einsum("ij,ij->j", design[:, active], design[:, active]) / n
    else:
        col_sq = np.asarray(col_sq)[active]
    weights = _penalty_weights(d, cfg)
    r = _residual(design, y, c)
    trace = [_objective_from_residual(r, c, weights, cfg)]
    converged = False
    sweeps = 0
    for sweeps in range(1, cfg.max_sweeps + 1):
        for k, sq in zip(active, col_sq):
            col = design[:, k]
            old = c[k]
            a = 2.0 * sq
            z = 2.0 / n * float(col @ r) + a * old
            w = weights[k]
            denom = a + 2.0 * cfg.lambda2 * w
            new = soft_threshold(z, cfg.lambda1 * w) / denom if denom > 0.0 else 0.0
            if new != old:
                r -= (new - old) * col
                c[k] = new
        trace.append(_objective_from_residual(r, c, weights, cfg))
        if trace[-2] - trace[-1] <= cfg.tolerance:
            converged = True
            break
    r = _residual(design, y, c)
    return DescentResult(c, r, trace, converged, sweeps)


def coordinate_descent(
    system: DesignSystem,
    cfg: ElasticNetConfig,
    active: Sequence[int] | None = None,
    warm_start=None,
) -> PceModel:
    """Minimize the Elastic Net loss over the ``active`` coordinates.

    Coordinates are visited in cyclic order until one full sweep lowers the
    objective by at most ``cfg.tolerance``. Hitting ``max_sweeps`` first
    returns the last iterate with ``converged=False``.
    """
    if warm_start is not None and len(warm_start) != system.n_terms:
        raise ValueError("warm start does not match the dictionary size")
    res = descend(system.design, system.y, cfg, warm_start, active, system.column_sq_norms)
    return PceModel.from_dense(
        system.spec,
        res.coefficients,
        solver="enet",
        objective_trace=res.objective_trace,
        config=cfg.to_dict(),
        converged=res.converged,
    )


def default_lambda_grid(points: int = 7, lo: float = 1e-8, hi: float = 1.0) -> list[tuple[float, float]]:
    """Logarithmic product grid over (lambda1, lambda2)."""
    values = np.logspace(np.log10(lo), np.log10(hi), points)
    return [(float(l1), float(l2)) for l1 in values for l2 in values]


def kfold_indices(n_samples: int, folds: int, seed: int = 0) -> list[np.ndarray]:
    """Held-out index sets of a shuffled k-fold split."""
    if folds < 2:
        raise ValueError("need at least 2 folds")
    if n_samples < folds:
        raise ValueError(f"{n_samples} samples cannot be split into {folds} folds")
    perm = np.random.default_rng(seed).permutation(n_samples)
    return [np.sort(part) for part in np.array_split(perm, folds)]


def _default_fit(system: DesignSystem, cfg: ElasticNetConfig) -> np.ndarray:
    return descend(system.design, system.y, cfg, col_sq=system.column_sq_norms).coefficients


def cv_scores(
    system: DesignSystem,
    grid: Sequence[tuple[float, float]] | None = None,
    folds: int = 5,
    seed: int = 0,
    base: ElasticNetConfig | None = None,
    fit: Callable[[DesignSystem, ElasticNetConfig], np.ndarray] | None = None,
) -> list[tuple[float, float, float]]:
    """Mean held-out MSE for each ``(lambda1, lambda2)`` grid point.

    ``fit`` maps a training system and config to a dense coefficient vector;
    it defaults to full-dictionary coordinate descent.
    """
    grid = default_lambda_grid() if grid is None else list(grid)
    if not grid:
        raise ValueError("empty lambda grid")
    base = ElasticNetConfig() if base is None else base
    fit = _default_fit if fit is None else fit
    held_out = kfold_indices(system.n_samples, folds, seed)
    everything = np.arange(system.n_samples)
    splits = [(np.setdiff1d(everything, test), test) for test in held_out]
    scores = []
    for l1, l2 in grid:
        cfg = ElasticNetConfig(l1, l2, base.tolerance, base.max_sweeps, base.penalize_constant)
        errs = []
        for train, test in splits:
            c = fit(system.subset(train), cfg)
            pred = system.design[test] @ c
            errs.append(np.mean((system.y[test] - pred) ** 2))
        scores.append((float(l1), float(l2), float(np.mean(errs))))
    return scores


def cross_validate(
    system: DesignSystem,
    folds: int = 5,
    grid: Sequence[tuple[float, float]] | None = None,
    seed: int = 0,
    base: ElasticNetConfig | None = None,
    fit: Callable[[DesignSystem, ElasticNetConfig], np.ndarray] | None = None,
) -> tuple[float, float]:
    """Pick ``(lambda1, lambda2)`` minimizing k-fold held-out MSE.

    Exact ties go to the larger ``lambda1``, then the larger ``lambda2``.
    """
    scores = cv_scores(system, grid, folds, seed, base, fit)
    l1, l2, _ = min(scores, key=lambda s: (s[2], -s[0], -s[1]))
    return l1, l2
