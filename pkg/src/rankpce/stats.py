"""Moments and Sobol indices read directly off PCE coefficients.

With an orthonormal basis the mean is the constant coefficient, the
variance is the sum of the other squared coefficients, and the partial
variance of a variable subset S collects the terms whose multi-index is
non-zero exactly on S.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .model import PceModel


def mean_from_model(model: PceModel) -> float:
    const = ~model.indices.any(axis=1)
    return float(model.coefficients[const].sum())


def variance_from_model(model: PceModel) -> float:
    nonconst = model.indices.any(axis=1)
    return float(np.sum(model.coefficients[nonconst] ** 2))


def _check_subset(model: PceModel, subset) -> tuple[int, ...]:
    s = tuple(sorted({int(k) for k in subset}))
    if not s or s[0] < 0 or s[-1] >= model.spec.n_dims:
        raise ValueError(f"invalid variable subset {subset!r} for {model.spec.n_dims} variables")
    return s


def partial_variance(model: PceModel, subset) -> float:
    """Variance carried by terms depending on exactly the variables in ``subset`` (0-based)."""
    s = _check_subset(model, subset)
    mask = np.zeros(model.spec.n_dims, dtype=bool)
    mask[list(s)] = True
    hit = np.all((model.indices > 0) == mask, axis=1)
    return float(np.sum(model.coefficients[hit] ** 2))


def sobol_index(model: PceModel, subset) -> float:
    var = variance_from_model(model)
    if var <= 0.0:
        raise ValueError("constant model: Sobol indices are undefined")
    return partial_variance(model, subset) / var


def total_index(model: PceModel, variable: int) -> float:
    """Total-effect index: share of variance from all terms involving ``variable``."""
    var = variance_from_model(model)
    if var <= 0.0:
        raise ValueError("constant model: Sobol indices are undefined")
    _check_subset(model, [variable])
    hit = model.indices[:, variable] > 0
    return float(np.sum(model.coefficients[hit] ** 2)) / var


@dataclass
class SensitivityReport:
    mean: float
    variance: float
    partial_variances: dict = field(default_factory=dict)
    sobol: dict = field(default_factory=dict)
    total: dict | None = None

    def to_dict(self) -> dict:
        out = {
            "mean": self.mean,
            "variance": self.variance,
            "partial_variances": [
                {"subset": list(s), "value": v} for s, v in self.partial_variances.items()
            ],
            "sobol": [{"subset": list(s), "value": v} for s, v in self.sobol.items()],
        }
        if self.total is not None:
            out["total"] = [{"variable": k, "value": v} for k, v in self.total.items()]
        return out


def sensitivity_report(model: PceModel, max_order: int = 3, total: bool = False) -> SensitivityReport:
    """Mean, variance and partial variances / Sobol indices of subsets up to ``max_order``.

    Only subsets that carry at least one term of the model are listed; the
    rest have zero partial variance.
    """
    var = variance_from_model(model)
    if var <= 0.0:
        raise ValueError("constant model: Sobol indices are undefined")
    n = model.spec.n_dims
    carried = {tuple(np.flatnonzero(row)) for row in model.indices if row.any()}
    partial, sobol = {}, {}
    for order in range(1, min(max_order, n) + 1):
        for s in combinations(range(n), order):
            if s in carried:
                pv = partial_variance(model, s)
                partial[s] = pv
                sobol[s] = pv / var
    totals = {k: total_index(model, k) for k in range(n)} if total else None
    return SensitivityReport(mean_from_model(model), var, partial, sobol, totals)
