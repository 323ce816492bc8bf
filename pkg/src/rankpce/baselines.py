"""Greedy sparse baselines: Orthogonal Matching Pursuit and Least Angle Regression.

Both work on unit-norm copies of the design columns and map coefficients
back to the orthonormal basis scale. Columns are not centred: the constant
polynomial is an ordinary atom here (centring would annihilate it), and the
other basis functions are mean-zero under the input measure anyway.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .basis import DesignSystem
from .model import PceModel


@dataclass(frozen=True)
class BaselineConfig:
    """``max_nonzeros`` is the atom budget N_D; ``tolerance`` bounds the RMS residual."""

    max_nonzeros: int = 50
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.max_nonzeros < 1:
            raise ValueError("max_nonzeros must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PathResult:
    """Final model plus the dense coefficients after each accepted step."""

    model: PceModel
    path: list
    flagged: bool = False

    def coefficients_at(self, n_atoms: int) -> np.ndarray:
        if not self.path:
            return np.zeros(self.model.spec.size)
        return self.path[min(n_atoms, len(self.path)) - 1]


def _column_norms(design: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.einsum("ij,ij->j", design, design))
    if np.any(norms == 0.0):
        raise ValueError(f"design column {int(np.flatnonzero(norms == 0.0)[0])} is identically zero")
    return norms


def _rms(r: np.ndarray) -> float:
    return float(np.sqrt(np.mean(r * r)))


def omp_fit(system: DesignSystem, cfg: BaselineConfig) -> PathResult:
    """Orthogonal Matching Pursuit.

    Each step adds the atom whose normalized column is most correlated with
    the residual, then refits unregularized least squares on all chosen
    atoms. Stops at ``max_nonzeros`` atoms or once the RMS residual drops
    to ``tolerance``. An atom that makes the active system rank deficient is
    dropped and the fit stops, flagged.
    """
    X, y = system.design, system.y
    if cfg.max_nonzeros > system.n_terms:
        raise ValueError(f"budget {cfg.max_nonzeros} exceeds the dictionary size {system.n_terms}")
    norms = _column_norms(X)
    active: list[int] = []
    coef = np.zeros(0)
    r = y.copy()
    path, trace = [], [float(np.mean(r * r))]
    flagged = False
    while len(active) < cfg.max_nonzeros and _rms(r) > cfg.tolerance:
        corr = np.abs(X.T @ r) / norms
        corr[active] = -1.0
        j = int(np.argmax(corr))
        trial = active + [j]
        A = X[:, trial]
        sol, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
        if rank < len(trial):
            flagged = True
            break
        active, coef = trial, sol
        r = y - A @ coef
        trace.append(float(np.mean(r * r)))
        dense = np.zeros(system.n_terms)
        dense[active] = coef
        path.append(dense)

    final = path[-1] if path else np.zeros(system.n_terms)
    model = PceModel.from_dense(
        system.spec, final, solver="omp", objective_trace=trace,
        config=cfg.to_dict(), converged=not flagged,
    )
    return PathResult(model, path, flagged)


def lars_fit(system: DesignSystem, cfg: BaselineConfig) -> PathResult:
    """Least Angle Regression (plain path, no lasso modification).

    The most correlated column enters first; the fit then moves along the
    direction equiangular to all active columns until an inactive column
    reaches the same absolute correlation, which then enters. After the
    ``max_nonzeros``-th entry one more such step is taken and its endpoint
    returned. A column collinear with the active set is skipped and the
    result flagged.
    """
    X, y = system.design, system.y
    n, d = X.shape
    if cfg.max_nonzeros > d:
        raise ValueError(f"budget {cfg.max_nonzeros} exceeds the dictionary size {d}")
    norms = _column_norms(X)
    beta = np.zeros(d)  # coefficients of the unit-norm columns
    mu = np.zeros(n)
    excluded = np.zeros(d, dtype=bool)
    active: list[int] = []
    path, trace = [], [float(np.mean(y * y))]
    flagged = False
    tiny = 1e-12

    corr = X.T @ y / norms
    if np.max(np.abs(corr)) > 0:
        active.append(int(np.argmax(np.abs(corr))))

    while active:
        corr = X.T @ (y - mu) / norms
        C = float(np.max(np.abs(corr[active])))
        if C <= tiny * max(1.0, float(np.linalg.norm(y))):
            break
        signs = np.sign(corr[active])
        XA = X[:, active] / norms[active] * signs
        G = XA.T @ XA
        try:
            L = np.linalg.cholesky(G)
            ones = np.ones(len(active))
            g1 = np.linalg.solve(L.T, np.linalg.solve(L, ones))
            if np.linalg.cond(G) > 1e12:
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            # newest entrant is collinear with the active set
            excluded[active.pop()] = True
            flagged = True
            if not active:
                break
            continue
        AA = 1.0 / np.sqrt(ones @ g1)
        w = AA * g1
        u = XA @ w
        a = X.T @ u / norms

        gamma = C / AA  # full least-squares step on the active set
        entering = None
        inactive = np.ones(d, dtype=bool)
        inactive[active] = False
        inactive &= ~excluded
        if inactive.any():
            idx = np.flatnonzero(inactive)
            cj, aj = corr[idx], a[idx]
            with np.errstate(divide="ignore", invalid="ignore"):
                cand = np.concatenate([(C - cj) / (AA - aj), (C + cj) / (AA + aj)])
            cand[~np.isfinite(cand) | (cand <= tiny * gamma)] = np.inf
            k = int(np.argmin(cand))
            if cand[k] < gamma:
                gamma = float(cand[k])
                entering = int(idx[k % len(idx)])

        mu = mu + gamma * u
        beta[active] += gamma * w * signs
        r = y - mu
        trace.append(float(np.mean(r * r)))
        path.append(beta / norms)
        if len(active) >= cfg.max_nonzeros or entering is None or _rms(r) <= cfg.tolerance:
            break
        active.append(entering)

    final = path[-1] if path else np.zeros(d)
    model = PceModel.from_dense(
        system.spec, final, solver="lars", objective_trace=trace,
        config=cfg.to_dict(), converged=not flagged,
    )
    return PathResult(model, path, flagged)
