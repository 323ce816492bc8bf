"""Orthonormal polynomial families and the tensor-product PCE dictionary.

Three univariate families are supported:

* ``legendre``: orthonormal under the uniform density on [-1, 1]
* ``hermite``: orthonormal under the standard normal density
* ``chebyshev_categorical``: Chebyshev polynomials of the first kind,
  orthonormal under the uniform discrete measure on the M Gauss-Chebyshev
  nodes used to encode an M-level categorical variable

Multivariate basis functions are products of univariate ones, which is only
orthonormal when the input coordinates are mutually independent.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

LEGENDRE = "legendre"
HERMITE = "hermite"
CHEBYSHEV_CATEGORICAL = "chebyshev_categorical"
KINDS = (LEGENDRE, HERMITE, CHEBYSHEV_CATEGORICAL)

# categorical inputs must sit on a node; anything further away is an encoding bug
NODE_TOLERANCE = 1e-9

# rows per block when assembling large design matrices
_ROW_BLOCK = 512


@dataclass(frozen=True)
class PolynomialFamily:
    """A univariate orthonormal polynomial family.

    Parameters
    ----------
    kind : str
        One of ``"legendre"``, ``"hermite"`` or ``"chebyshev_categorical"``.
    levels : int, optional
        Number of categorical levels M. Required for the categorical family
        and forbidden otherwise.
    """

    kind: str
    levels: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown polynomial family {self.kind!r}")
        if self.kind == CHEBYSHEV_CATEGORICAL:
            if self.levels is None or int(self.levels) < 1:
                raise ValueError("categorical family needs levels >= 1")
            object.__setattr__(self, "levels", int(self.levels))
        elif self.levels is not None:
            raise ValueError(f"{self.kind} family takes no levels")

    @classmethod
    def legendre(cls) -> "PolynomialFamily":
        return cls(LEGENDRE)

    @classmethod
    def hermite(cls) -> "PolynomialFamily":
        return cls(HERMITE)

    @classmethod
    def categorical(cls, levels: int) -> "PolynomialFamily":
        return cls(CHEBYSHEV_CATEGORICAL, levels)

    @property
    def max_degree(self) -> int | None:
        """Highest admissible degree, or None when unbounded."""
        if self.kind == CHEBYSHEV_CATEGORICAL:
            return self.levels - 1
        return None

    def nodes(self) -> np.ndarray:
        """Chebyshev nodes of a categorical family, in level order."""
        if self.kind != CHEBYSHEV_CATEGORICAL:
            raise ValueError(f"{self.kind} family has no nodes")
        m = np.arange(1, self.levels + 1)
        return np.cos((2 * m - 1) * np.pi / (2 * self.levels))

    def to_dict(self) -> dict:
        if self.kind == CHEBYSHEV_CATEGORICAL:
            return {"kind": self.kind, "levels": self.levels}
        return {"kind": self.kind}

    @classmethod
    def from_dict(cls, d: dict) -> "PolynomialFamily":
        return cls(d["kind"], d.get("levels"))


def chebyshev_node(m: int, levels: int) -> float:
    """Position of the ``m``-th (1-based) of ``levels`` Chebyshev nodes."""
    if not 1 <= m <= levels:
        raise ValueError(f"level index {m} outside 1..{levels}")
    return math.cos((2 * m - 1) * math.pi / (2 * levels))


def _check_on_nodes(family: PolynomialFamily, x: np.ndarray) -> None:
    nodes = family.nodes()
    gap = np.min(np.abs(x.reshape(-1, 1) - nodes.reshape(1, -1)), axis=1)
    bad = np.flatnonzero(gap > NODE_TOLERANCE)
    if bad.size:
        raise ValueError(
            f"value {x.ravel()[bad[0]]!r} is not a Chebyshev node of a "
            f"{family.levels}-level categorical variable"
        )


def univariate_table(family: PolynomialFamily, max_degree: int, x) -> np.ndarray:
    """Evaluate degrees ``0..max_degree`` of ``family`` at points ``x``.

    Returns an array of shape ``x.shape + (max_degree + 1,)``. Values come
    from the family's three-term recurrence, then are scaled to unit norm.
    """
    x = np.asarray(x, dtype=float)
    if max_degree < 0:
        raise ValueError("degree must be non-negative")
    cap = family.max_degree
    if cap is not None and max_degree > cap:
        raise ValueError(
            f"degree {max_degree} exceeds the cap {cap} of a "
            f"{family.levels}-level categorical variable"
        )
    if family.kind == CHEBYSHEV_CATEGORICAL:
        _check_on_nodes(family, x)

    out = np.empty(x.shape + (max_degree + 1,))
    out[..., 0] = 1.0
    if max_degree >= 1:
        out[..., 1] = x
    for k in range(1, max_degree):
        if family.kind == LEGENDRE:
            out[..., k + 1] = ((2 * k + 1) * x * out[..., k] - k * out[..., k - 1]) / (k + 1)
        elif family.kind == HERMITE:
            out[..., k + 1] = x * out[..., k] - k * out[..., k - 1]
        else:
            out[..., k + 1] = 2 * x * out[..., k] - out[..., k - 1]

    k = np.arange(max_degree + 1)
    if family.kind == LEGENDRE:
        scale = np.sqrt(2 * k + 1.0)
    elif family.kind == HERMITE:
        scale = 1.0 / np.sqrt([float(math.factorial(j)) for j in k])
    else:
        # discrete sum over M nodes with weight 1/M: ||T_0||^2 = 1, ||T_k||^2 = 1/2
        scale = np.where(k == 0, 1.0, math.sqrt(2.0))
    return out * scale


def eval_univariate(family: PolynomialFamily, degree: int, x):
    """Value of the orthonormal polynomial of ``degree`` at ``x``.

    Works elementwise on arrays; returns a float for scalar input.

    >>> round(eval_univariate(PolynomialFamily.legendre(), 1, 1.0), 7)
    1.7320508
    """
    value = univariate_table(family, degree, x)[..., degree]
    return float(value) if np.ndim(value) == 0 else value


def _compositions(total: int, caps: Sequence[int]):
    """Yield tuples summing to ``total`` with entry k <= caps[k], ascending lex."""
    if len(caps) == 1:
        if total <= caps[0]:
            yield (total,)
        return
    rest_cap = sum(caps[1:])
    for first in range(max(0, total - rest_cap), min(total, caps[0]) + 1):
        for tail in _compositions(total - first, caps[1:]):
            yield (first,) + tail


@dataclass(frozen=True)
class BasisSpec:
    """Per-dimension polynomial families plus a total-degree cap."""

    families: tuple[PolynomialFamily, ...]
    max_degree: int

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(self.families))
        if not self.families:
            raise ValueError("a basis needs at least one dimension")
        if int(self.max_degree) < 0:
            raise ValueError("max_degree must be non-negative")
        object.__setattr__(self, "max_degree", int(self.max_degree))

    @classmethod
    def legendre(cls, n: int, max_degree: int) -> "BasisSpec":
        return cls((PolynomialFamily.legendre(),) * n, max_degree)

    @property
    def n_dims(self) -> int:
        return len(self.families)

    @property
    def degree_caps(self) -> tuple[int, ...]:
        return tuple(
            self.max_degree if f.max_degree is None else min(self.max_degree, f.max_degree)
            for f in self.families
        )

    @cached_property
    def indices(self) -> np.ndarray:
        """Multi-indices of the dictionary as a read-only ``(D, n)`` array."""
        idx = generate_multi_indices(self)
        idx.setflags(write=False)
        return idx

    @property
    def size(self) -> int:
        return len(self.indices)

    @cached_property
    def _positions(self) -> dict:
        return {tuple(int(a) for a in row): i for i, row in enumerate(self.indices)}

    def position(self, multi_index) -> int:
        """Column of ``multi_index`` in the dictionary (KeyError if absent)."""
        return self._positions[tuple(int(a) for a in multi_index)]

    @cached_property
    def _build_plan(self) -> list:
        """Recipe for assembling the full design column by column.

        Each non-constant multi-index is its parent (the same index with the
        last non-zero degree set to 0) times one univariate factor. Grouping by
        the number of non-zero degrees makes every parent available before its
        children. Returns ``(columns, parents, dims, degrees)`` per level.
        """
        idx = self.indices
        n = self.n_dims
        nonzero = idx > 0
        level = nonzero.sum(axis=1)
        last = n - 1 - np.argmax(nonzero[:, ::-1], axis=1)
        plan = []
        for lv in range(1, int(level.max(initial=0)) + 1):
            cols = np.flatnonzero(level == lv)
            dims = last[cols]
            parent_rows = idx[cols].copy()
            parent_rows[np.arange(len(cols)), dims] = 0
            parents = np.array([self._positions[tuple(r)] for r in parent_rows.tolist()], dtype=np.intp)
            plan.append((cols, parents, dims, idx[cols, dims]))
        return plan

    def to_dict(self) -> dict:
        return {"families": [f.to_dict() for f in self.families], "max_degree": self.max_degree}

    @classmethod
    def from_dict(cls, d: dict) -> "BasisSpec":
        return cls(tuple(PolynomialFamily.from_dict(f) for f in d["families"]), d["max_degree"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, s: str) -> "BasisSpec":
        return cls.from_dict(json.loads(s))


def generate_multi_indices(spec: BasisSpec) -> np.ndarray:
    """All multi-indices of ``spec`` in graded lexicographic order.

    Rows are sorted by total degree and then lexicographically, so row 0 is
    the constant polynomial. Per-dimension caps of categorical families are
    honoured.
    """
    caps = spec.degree_caps
    rows = [
        comp
        for total in range(spec.max_degree + 1)
        for comp in _compositions(total, caps)
    ]
    return np.array(rows, dtype=np.int64).reshape(len(rows), spec.n_dims)


def eval_basis(spec: BasisSpec, multi_index, x) -> float:
    """Evaluate the tensor-product basis function ``multi_index`` at one point."""
    alpha = np.asarray(multi_index, dtype=int)
    x = np.asarray(x, dtype=float)
    if alpha.shape != (spec.n_dims,) or x.shape != (spec.n_dims,):
        raise ValueError(
            f"expected {spec.n_dims}-dimensional index and point, "
            f"got {alpha.shape} and {x.shape}"
        )
    value = 1.0
    for fam, a, xk in zip(spec.families, alpha, x):
        value *= eval_univariate(fam, int(a), xk)
    return float(value)


def _tables(spec: BasisSpec, X: np.ndarray, indices: np.ndarray) -> list[np.ndarray]:
    tops = indices.max(axis=0) if len(indices) else np.zeros(spec.n_dims, dtype=int)
    return [univariate_table(f, int(top), X[:, k]) for k, (f, top) in enumerate(zip(spec.families, tops))]


def design_matrix(spec: BasisSpec, X, indices=None, *, squared: bool = False) -> np.ndarray:
    """Matrix of basis evaluations ``p_A(x_i)``, shape ``(N, D)``.

    Parameters
    ----------
    spec : BasisSpec
    X : array_like, shape (N, n)
        Inputs already mapped to each family's native domain.
    indices : array_like, optional
        Subset of multi-indices (rows) to evaluate; defaults to the whole
        dictionary.
    squared : bool
        Return ``p_A(x_i)**2`` instead.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.n_dims:
        raise ValueError(f"expected {spec.n_dims} input columns, got {X.shape[1]}")
    full = indices is None
    indices = spec.indices if full else np.asarray(indices, dtype=int).reshape(-1, spec.n_dims)
    tables = _tables(spec, X, indices)
    if squared:
        tables = [t * t for t in tables]

    N, D = X.shape[0], len(indices)
    if full:
        return _full_design(spec, tables, N)
    out = np.empty((N, D))
    # only dimensions with a non-zero degree contribute a factor
    active = [k for k in range(spec.n_dims) if indices[:, k].any()]
    for start in range(0, N, _ROW_BLOCK):
        rows = slice(start, start + _ROW_BLOCK)
        block = out[rows]
        block.fill(1.0)
        for k in active:
            block *= tables[k][rows][:, indices[:, k]]
    return out


def _full_design(spec: BasisSpec, tables: list[np.ndarray], N: int) -> np.ndarray:
    """Whole-dictionary design with one multiply per entry (see ``_build_plan``)."""
    plan = spec._build_plan
    offsets = np.concatenate([[0], np.cumsum([t.shape[1] for t in tables])])
    flat_plan = [(cols, parents, offsets[dims] + degs) for cols, parents, dims, degs in plan]
    out = np.empty((N, spec.size))
    for start in range(0, N, _ROW_BLOCK):
        rows = slice(start, start + _ROW_BLOCK)
        factors = np.concatenate([t[rows] for t in tables], axis=1)
        block = out[rows]
        block[:, 0] = 1.0  # graded-lex order puts the constant first
        for cols, parents, tab in flat_plan:
            block[:, cols] = block[:, parents] * factors[:, tab]
    return out


@dataclass(frozen=True)
class DesignSystem:
    """Regression system for one sample set.

    ``design[i, A] = p_A(x_i)``; ``gram`` and ``moment`` are the empirical
    second-moment matrix ``design.T @ design / N`` and correlation vector
    ``design.T @ y / N``. The Gram matrix is only formed on request since it
    is ``D x D``.
    """

    spec: BasisSpec
    X: np.ndarray
    y: np.ndarray
    design: np.ndarray = field(repr=False)

    @property
    def n_samples(self) -> int:
        return self.design.shape[0]

    @property
    def n_terms(self) -> int:
        return self.design.shape[1]

    @cached_property
    def gram(self) -> np.ndarray:
        return self.design.T @ self.design / self.n_samples

    @cached_property
    def moment(self) -> np.ndarray:
        return self.design.T @ self.y / self.n_samples

    @cached_property
    def column_sq_norms(self) -> np.ndarray:
        """Diagonal of the Gram matrix, ``(1/N) sum_i p_A(x_i)^2``."""
        return np.einsum("ij,ij->j", self.design, self.design) / self.n_samples

    def subset(self, rows) -> "DesignSystem":
        """System restricted to sample ``rows`` (used for CV folds)."""
        rows = np.asarray(rows)
        return DesignSystem(self.spec, self.X[rows], self.y[rows], self.design[rows])


def build_design_system(spec: BasisSpec, X, y) -> DesignSystem:
    """Assemble the design matrix for samples ``X`` with responses ``y``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] < 1:
        raise ValueError("need at least one sample")
    if X.shape[0] != y.shape[0]:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite entries in X or y")
    return DesignSystem(spec, X, y, design_matrix(spec, X))


def sample_inputs(spec: BasisSpec, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Draw inputs from the product measure under which ``spec`` is orthonormal."""
    cols = []
    for fam in spec.families:
        if fam.kind == LEGENDRE:
            cols.append(rng.uniform(-1.0, 1.0, n_samples))
        elif fam.kind == HERMITE:
            cols.append(rng.standard_normal(n_samples))
        else:
            cols.append(fam.nodes()[rng.integers(0, fam.levels, n_samples)])
    return np.column_stack(cols)
