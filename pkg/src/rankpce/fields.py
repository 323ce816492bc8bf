"""Karhunen-Loeve expansion of an exponentially correlated 2-D random field.

The covariance is collocated at cell centres of an ``nx x ny`` grid over a
square of side ``length``: ``C_ij = exp(-|r_i - r_j| / corr_length)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import eigh, eigvalsh
from scipy.spatial.distance import pdist, squareform


@dataclass(frozen=True)
class RandomFieldSpec:
    nx: int
    ny: int
    length: float
    corr_length: float
    n_kl: int

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("grid needs at least one cell per axis")
        if not self.corr_length > 0 or not self.length > 0:
            raise ValueError("lengths must be positive")
        if not 1 <= self.n_kl <= self.nx * self.ny:
            raise ValueError(f"n_kl must lie in 1..{self.nx * self.ny}")

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def cell_centres(self) -> np.ndarray:
        """``(nx*ny, 2)`` centres, x varying fastest."""
        hx, hy = self.length / self.nx, self.length / self.ny
        xs = (np.arange(self.nx) + 0.5) * hx
        ys = (np.arange(self.ny) + 0.5) * hy
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class KLBasis:
    """Leading KL modes plus the full eigenvalue spectrum.

    ``eigenvalues`` covers the whole spectrum in descending order;
    ``eigenvectors`` holds the first ``n_kl`` modes as columns.
    """

    spec: RandomFieldSpec
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def covariance_matrix(spec: RandomFieldSpec) -> np.ndarray:
    d = squareform(pdist(spec.cell_centres()))
    return np.exp(-d / spec.corr_length)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    pick = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pick, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def kl_decompose(spec: RandomFieldSpec) -> KLBasis:
    """Eigen-decompose the grid covariance.

    Tiny negative eigenvalues from round-off are clipped to zero. Each
    eigenvector's largest-magnitude entry is made positive.
    """
    C = covariance_matrix(spec)
    n = spec.n_cells
    try:
        values = eigvalsh(C)[::-1]
        lead_vals, vecs = eigh(C, subset_by_index=[n - spec.n_kl, n - 1])
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(f"eigensolver failed: {exc}") from exc
    vecs = _fix_signs(vecs[:, ::-1])
    return KLBasis(spec, np.clip(values, 0.0, None), vecs)


def energy_fraction(basis: KLBasis, n: int, power: int = 2) -> float:
    """Share of the spectrum in the first ``n`` modes.

    ``power=2`` sums squared eigenvalues; ``power=1`` is the usual
    variance fraction.
    """
    lam = basis.eigenvalues
    if not 0 <= n <= len(lam):
        raise ValueError(f"n must lie in 0..{len(lam)}")
    w = lam ** power
    return float(w[:n].sum() / w.sum())


def realize_field(basis: KLBasis, theta, sqrt_eigenvalues: bool = True) -> np.ndarray:
    """Log-permeability on the grid, shape ``(ny, nx)``, for KL coordinates ``theta``.

    With ``sqrt_eigenvalues=False`` the modes are weighted by the eigenvalues
    themselves instead of their square roots.
    """
    theta = np.asarray(theta, dtype=float)
    k = basis.eigenvectors.shape[1]
    if theta.shape != (k,):
        raise ValueError(f"expected {k} KL coordinates, got shape {theta.shape}")
    lam = basis.eigenvalues[:k]
    weights = np.sqrt(lam) if sqrt_eigenvalues else lam
    field = basis.eigenvectors @ (theta * weights)
    return field.reshape(basis.spec.ny, basis.spec.nx)
