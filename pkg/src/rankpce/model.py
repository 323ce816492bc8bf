"""Fitted sparse PCE surrogate and its JSON form."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .basis import BasisSpec, design_matrix


@dataclass
class PceModel:
    """Sparse coefficient vector over a PCE dictionary.

    Only non-zero coefficients are stored: ``indices[j]`` is the multi-index
    carrying ``coefficients[j]``. Predictions are in the scale of the data
    the model was fitted on; ``y_scale`` multiplies them back to the raw
    QoI scale when the training data were normalized.
    """

    spec: BasisSpec
    indices: np.ndarray
    coefficients: np.ndarray
    solver: str = "enet"
    objective_trace: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    converged: bool = True
    y_scale: float = 1.0
    variables: list | None = None

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64).reshape(-1, self.spec.n_dims)
        self.coefficients = np.asarray(self.coefficients, dtype=float).ravel()
        if len(self.indices) != len(self.coefficients):
            raise ValueError("indices and coefficients differ in length")
        for row in self.indices:
            self.spec.position(row)  # KeyError for indices outside the dictionary

    @classmethod
    def from_dense(cls, spec: BasisSpec, c, **kwargs) -> "PceModel":
        """Build a model from a full-length coefficient vector, dropping zeros."""
        c = np.asarray(c, dtype=float)
        if c.shape != (spec.size,):
            raise ValueError(f"expected {spec.size} coefficients, got {c.shape}")
        nz = np.flatnonzero(c)
        return cls(spec, spec.indices[nz], c[nz], **kwargs)

    def dense(self) -> np.ndarray:
        c = np.zeros(self.spec.size)
        for row, value in zip(self.indices, self.coefficients):
            c[self.spec.position(row)] += value
        return c

    def as_dict(self) -> dict[tuple, float]:
        return {tuple(int(a) for a in row): float(v) for row, v in zip(self.indices, self.coefficients)}

    @property
    def n_nonzero(self) -> int:
        return int(np.count_nonzero(self.coefficients))

    @property
    def support(self) -> set[tuple]:
        return {k for k, v in self.as_dict().items() if v != 0.0}

    @property
    def final_objective(self) -> float | None:
        return float(self.objective_trace[-1]) if self.objective_trace else None

    def predict(self, X, *, denormalize: bool = False) -> np.ndarray:
        """Evaluate the expansion at transformed inputs ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if len(self.indices) == 0:
            out = np.zeros(X.shape[0])
        else:
            out = design_matrix(self.spec, X, self.indices) @ self.coefficients
        return out * self.y_scale if denormalize else out

    def to_dict(self) -> dict[str, Any]:
        return {
            "solver": self.solver,
            "spec": self.spec.to_dict(),
            "terms": [
                {"multi_index": [int(a) for a in row], "coefficient": float(v)}
                for row, v in zip(self.indices, self.coefficients)
            ],
            "config": self.config,
            "converged": bool(self.converged),
            "final_objective": self.final_objective,
            "objective_trace": [float(v) for v in self.objective_trace],
            "y_scale": float(self.y_scale),
            "variables": self.variables,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PceModel":
        spec = BasisSpec.from_dict(d["spec"])
        terms = d.get("terms", [])
        return cls(
            spec,
            np.array([t["multi_index"] for t in terms], dtype=np.int64).reshape(-1, spec.n_dims),
            np.array([t["coefficient"] for t in terms], dtype=float),
            solver=d.get("solver", "enet"),
            objective_trace=list(d.get("objective_trace", [])),
            config=d.get("config", {}),
            converged=d.get("converged", True),
            y_scale=d.get("y_scale", 1.0),
            variables=d.get("variables"),
        )

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, s: str) -> "PceModel":
        return cls.from_dict(json.loads(s))
