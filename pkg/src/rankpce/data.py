"""Datasets, input transforms and CSV ingestion.

Every input variable is mapped onto the native domain of its polynomial
family before fitting:

* bounded continuous -> [-1, 1] (linear rescale or empirical quantiles), Legendre
* Gaussian continuous -> standardized, Hermite
* categorical with M levels -> the M Chebyshev nodes, Chebyshev

A schema is always explicit (a JSON sidecar); nothing is inferred.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata

from .basis import BasisSpec, PolynomialFamily, chebyshev_node

DOMAIN_TOLERANCE = 1e-9

CONTINUOUS = "continuous"
GAUSSIAN = "gaussian"
CATEGORICAL = "categorical"


class DataError(ValueError):
    """Malformed dataset, schema or value."""


def rescale_linear(value, lo: float, hi: float):
    """Map ``[lo, hi]`` linearly onto ``[-1, 1]``."""
    if not lo < hi:
        raise DataError(f"empty interval [{lo}, {hi}]")
    v = np.asarray(value, dtype=float)
    span = hi - lo
    if np.any(v < lo - DOMAIN_TOLERANCE * span) or np.any(v > hi + DOMAIN_TOLERANCE * span):
        bad = v[(v < lo - DOMAIN_TOLERANCE * span) | (v > hi + DOMAIN_TOLERANCE * span)].ravel()[0]
        raise DataError(f"value {bad} outside the domain [{lo}, {hi}]")
    out = np.clip(2.0 * (v - lo) / span - 1.0, -1.0, 1.0)
    return float(out) if out.ndim == 0 else out


def unscale_linear(value, lo: float, hi: float):
    v = np.asarray(value, dtype=float)
    out = lo + (v + 1.0) * (hi - lo) / 2.0
    return float(out) if out.ndim == 0 else out


def quantile_transform(samples) -> np.ndarray:
    """Empirical rank transform onto (-1, 1).

    The value of (average, 1-based) rank j among N maps to
    ``2 * (j - 0.5) / N - 1``.
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise DataError("quantile transform needs at least 2 samples")
    j = rankdata(x, method="average")
    return 2.0 * (j - 0.5) / x.size - 1.0


def quantile_apply(reference, values) -> np.ndarray:
    """Transform ``values`` with the empirical distribution of ``reference``.

    Applied to ``reference`` itself this reproduces :func:`quantile_transform`.
    """
    ref = np.sort(np.asarray(reference, dtype=float).ravel())
    v = np.asarray(values, dtype=float)
    below = np.searchsorted(ref, v, side="left")
    upto = np.searchsorted(ref, v, side="right")
    # average 1-based rank among ties; unseen values sit between neighbours
    j = np.where(upto > below, (below + 1 + upto) / 2.0, below + 0.5)
    return np.clip(2.0 * (j - 0.5) / ref.size - 1.0, -1.0, 1.0)


@dataclass(frozen=True)
class VariableSpec:
    """One input column and how it is transformed.

    ``kind`` is ``"continuous"`` (with ``lo``/``hi`` and an optional
    ``transform`` of ``"linear"`` or ``"quantile"``), ``"gaussian"`` (with
    ``mean``/``std``) or ``"categorical"`` (with ordered ``levels``).
    """

    name: str
    kind: str
    lo: float | None = None
    hi: float | None = None
    mean: float | None = None
    std: float | None = None
    levels: tuple[str, ...] | None = None
    transform: str = "linear"
    reference: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind == CONTINUOUS:
            if self.transform not in ("linear", "quantile"):
                raise DataError(f"{self.name}: unknown transform {self.transform!r}")
            if self.transform == "linear" and not (
                self.lo is not None and self.hi is not None and self.lo < self.hi
            ):
                raise DataError(f"{self.name}: continuous variable needs lo < hi")
        elif self.kind == GAUSSIAN:
            if self.mean is None or self.std is None or not self.std > 0:
                raise DataError(f"{self.name}: gaussian variable needs mean and std > 0")
        elif self.kind == CATEGORICAL:
            if not self.levels:
                raise DataError(f"{self.name}: categorical variable needs levels")
            levels = tuple(str(v) for v in self.levels)
            if len(set(levels)) != len(levels):
                raise DataError(f"{self.name}: categorical levels must be unique")
            object.__setattr__(self, "levels", levels)
        else:
            raise DataError(f"{self.name}: unknown variable kind {self.kind!r}")

    @property
    def family(self) -> PolynomialFamily:
        if self.kind == GAUSSIAN:
            return PolynomialFamily.hermite()
        if self.kind == CATEGORICAL:
            return PolynomialFamily.categorical(len(self.levels))
        return PolynomialFamily.legendre()

    def parse(self, text: str):
        """Parse one raw CSV cell."""
        if self.kind == CATEGORICAL:
            if text not in self.levels:
                raise DataError(f"unknown level {text!r}")
            return text
        try:
            return float(text)
        except ValueError:
            raise DataError(f"cannot parse {text!r} as a number") from None

    def transform_values(self, raw) -> np.ndarray:
        """Map raw column values onto the family's native domain."""
        if self.kind == CATEGORICAL:
            return np.array([encode_categorical(v, self) for v in raw], dtype=float)
        x = np.asarray(raw, dtype=float)
        if self.kind == GAUSSIAN:
            return (x - self.mean) / self.std
        if self.transform == "quantile":
            if self.reference is None:
                return quantile_transform(x)
            return quantile_apply(self.reference, x)
        return np.asarray(rescale_linear(x, self.lo, self.hi), dtype=float)

    def with_reference(self, raw) -> "VariableSpec":
        """Copy that remembers training values for quantile transforms."""
        if self.kind != CONTINUOUS or self.transform != "quantile":
            return self
        ref = tuple(float(v) for v in np.sort(np.asarray(raw, dtype=float)))
        return VariableSpec(self.name, self.kind, self.lo, self.hi, transform="quantile", reference=ref)

    def to_dict(self) -> dict:
        d: dict = {"name": self.name, "kind": self.kind}
        if self.kind == CONTINUOUS:
            if self.lo is not None:
                d["lo"], d["hi"] = self.lo, self.hi
            if self.transform != "linear":
                d["transform"] = self.transform
            if self.reference is not None:
                d["reference"] = list(self.reference)
        elif self.kind == GAUSSIAN:
            d["mean"], d["std"] = self.mean, self.std
        else:
            d["levels"] = list(self.levels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "VariableSpec":
        if "name" not in d or "kind" not in d:
            raise DataError(f"variable entry {d!r} needs 'name' and 'kind'")
        levels = d.get("levels")
        ref = d.get("reference")
        return cls(
            name=str(d["name"]),
            kind=d["kind"],
            lo=d.get("lo"),
            hi=d.get("hi"),
            mean=d.get("mean"),
            std=d.get("std"),
            levels=tuple(levels) if levels is not None else None,
            transform=d.get("transform", "linear"),
            reference=tuple(ref) if ref is not None else None,
        )


def encode_categorical(label, spec: VariableSpec) -> float:
    """Chebyshev node of ``label``: level m (1-based) of M maps to ``cos((2m-1)pi/2M)``."""
    if spec.kind != CATEGORICAL:
        raise DataError(f"{spec.name} is not categorical")
    try:
        m = spec.levels.index(str(label)) + 1
    except ValueError:
        raise DataError(f"{spec.name}: unknown level {label!r}") from None
    return chebyshev_node(m, len(spec.levels))


def normalize_qoi(y) -> tuple[np.ndarray, float]:
    """Scale ``y`` to unit mean square; returns the scaled values and the factor."""
    y = np.asarray(y, dtype=float)
    top = float(np.max(np.abs(y))) if y.size else 0.0
    # factor out the peak so tiny or huge values do not under/overflow
    scale = top * float(np.sqrt(np.mean((y / top) ** 2))) if top > 0 else 0.0
    if scale == 0.0:
        raise DataError("cannot normalize an all-zero QoI")
    return y / scale, scale


def denormalize_qoi(y_scaled, scale: float) -> np.ndarray:
    return np.asarray(y_scaled, dtype=float) * scale


@dataclass(frozen=True)
class Schema:
    variables: tuple[VariableSpec, ...]
    qoi: str | None = None

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def basis(self, max_degree: int) -> BasisSpec:
        return BasisSpec(tuple(v.family for v in self.variables), max_degree)

    def to_dict(self) -> dict:
        d: dict = {"variables": [v.to_dict() for v in self.variables]}
        if self.qoi is not None:
            d["qoi"] = self.qoi
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Schema":
        if "variables" not in d:
            raise DataError("schema needs a 'variables' list")
        variables = tuple(VariableSpec.from_dict(v) for v in d["variables"])
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise DataError("duplicate variable names in schema")
        return cls(variables, d.get("qoi"))

    @classmethod
    def load(cls, path) -> "Schema":
        with open(path, encoding="utf-8") as fh:
            try:
                return cls.from_dict(json.load(fh))
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid JSON ({exc})") from None


@dataclass
class Dataset:
    """Samples of a QoI with their raw and transformed inputs.

    ``X`` holds the transformed inputs ready for the basis; ``y`` is the raw
    QoI and ``y_scale`` the factor that normalizes it.
    """

    variables: tuple[VariableSpec, ...]
    X_raw: list = field(repr=False)
    X: np.ndarray = field(repr=False)
    y: np.ndarray | None = field(repr=False, default=None)
    y_scale: float = 1.0

    @property
    def n_samples(self) -> int:
        return self.X.shape[0]

    @property
    def y_normalized(self) -> np.ndarray:
        return self.y / self.y_scale

    @property
    def schema(self) -> Schema:
        return Schema(self.variables)


def load_csv(path, schema: Schema, qoi: str | None = None, *, normalize: bool = True, require_qoi: bool = True) -> Dataset:
    """Read and validate a comma-separated dataset.

    The header must contain every schema variable (and the QoI column when
    ``require_qoi``); other columns are ignored. Errors name the offending
    row (1-based, header is row 1) and column.
    """
    qoi = qoi if qoi is not None else schema.qoi
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: no header row") from None
        wanted = schema.names + ([qoi] if require_qoi else [])
        if require_qoi and qoi is None:
            raise DataError("no QoI column given")
        missing = [name for name in wanted if name not in header]
        if missing:
            raise DataError(f"{path}: missing column(s) {', '.join(missing)}")
        pos = {name: header.index(name) for name in wanted}
        raw_cols: list[list] = [[] for _ in schema.variables]
        y = []
        for rowno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {rowno} has {len(row)} fields, expected {len(header)}")
            for k, var in enumerate(schema.variables):
                cell = row[pos[var.name]].strip()
                try:
                    raw_cols[k].append(var.parse(cell))
                except DataError as exc:
                    raise DataError(f"{path}: row {rowno}, column {var.name!r}: {exc}") from None
            if require_qoi:
                cell = row[pos[qoi]].strip()
                try:
                    y.append(float(cell))
                except ValueError:
                    raise DataError(f"{path}: row {rowno}, column {qoi!r}: cannot parse {cell!r} as a number") from None
    n_rows = len(raw_cols[0]) if raw_cols else len(y)
    if n_rows == 0:
        raise DataError(f"{path}: no samples")
    return build_dataset(schema.variables, raw_cols, np.array(y) if require_qoi else None, normalize=normalize)


def build_dataset(variables, raw_cols, y=None, *, normalize: bool = True) -> Dataset:
    """Transform raw columns (one sequence per variable) into a :class:`Dataset`."""
    variables = tuple(v.with_reference(col) if v.reference is None else v for v, col in zip(variables, raw_cols))
    cols = []
    for var, col in zip(variables, raw_cols):
        try:
            cols.append(var.transform_values(col))
        except DataError as exc:
            raise DataError(f"column {var.name!r}: {exc}") from None
    X = np.column_stack(cols) if cols else np.zeros((0, 0))
    scale = 1.0
    if y is not None:
        y = np.asarray(y, dtype=float)
        if normalize:
            _, scale = normalize_qoi(y)
    raw_rows = [list(r) for r in zip(*raw_cols)]
    return Dataset(variables, raw_rows, X, y, scale)
