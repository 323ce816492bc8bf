"""Shared fixtures and independent oracles for the test suite."""
import itertools
import math

import numpy as np
import pytest
from numpy.polynomial import hermite_e, legendre

from rankpce.basis import BasisSpec, build_design_system


def legendre_oracle(k, x):
    """Orthonormal Legendre value from numpy's coefficient-based evaluator."""
    coef = np.zeros(k + 1)
    coef[k] = 1.0
    return math.sqrt(2 * k + 1) * legendre.legval(x, coef)


def hermite_oracle(k, x):
    coef = np.zeros(k + 1)
    coef[k] = 1.0
    return hermite_e.hermeval(x, coef) / math.sqrt(math.factorial(k))


def gauss_legendre_mean(f, n_dims, points=20):
    """E[f(X)] for X uniform on [-1, 1]^n by tensor Gauss-Legendre quadrature."""
    x, w = legendre.leggauss(points)
    w = w / 2.0
    grids = np.meshgrid(*([x] * n_dims), indexing="ij")
    weights = np.ones_like(grids[0])
    for wk in np.meshgrid(*([w] * n_dims), indexing="ij"):
        weights = weights * wk
    pts = np.column_stack([g.ravel() for g in grids])
    return float(np.sum(weights.ravel() * f(pts)))


def planted_system(n_dims=3, degree=10, sparsity=10, n_samples=200, seed=0):
    """Noiseless samples of a random sparse Legendre expansion."""
    rng = np.random.default_rng(seed)
    spec = BasisSpec.legendre(n_dims, degree)
    c = np.zeros(spec.size)
    support = rng.choice(spec.size, size=sparsity, replace=False)
    c[support] = rng.uniform(1.0, 2.0, sparsity) * rng.choice([-1.0, 1.0], sparsity)
    X = rng.uniform(-1.0, 1.0, (n_samples, n_dims))
    probe = build_design_system(spec, X, np.zeros(n_samples))
    return build_design_system(spec, X, probe.design @ c), c


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def quadrature_stats(f, n, points=12):
    """Mean, variance and partial variances of f by tensor Gauss-Legendre."""
    x, w = legendre.leggauss(points)
    w = w / 2.0
    grid = np.array(list(itertools.product(x, repeat=n)))
    weights = np.prod(np.array(list(itertools.product(w, repeat=n))), axis=1)
    vals = f(grid).reshape((points,) * n)
    W = weights.reshape((points,) * n)
    mean = float(np.sum(W * vals))
    var = float(np.sum(W * vals**2)) - mean**2

    def closed(S):
        # Var(E[f | x_S])
        others = tuple(k for k in range(n) if k not in S)
        wk = w
        cond = vals
        for k in sorted(others, reverse=True):
            cond = np.tensordot(cond, wk, axes=([k], [0]))
        wS = np.ones(()) if not S else np.prod(np.array(list(itertools.product(w, repeat=len(S)))), axis=1).reshape((points,) * len(S))
        return float(np.sum(wS * cond**2)) - mean**2

    partial = {}
    for order in range(1, n + 1):
        for S in itertools.combinations(range(n), order):
            partial[S] = sum(
                (-1) ** (len(S) - len(T)) * closed(T)
                for r in range(0, len(S) + 1)
                for T in itertools.combinations(S, r)
                if T
            )
    return mean, var, partial


_ACCEPTANCE: dict[int, list[tuple[bool, str]]] = {}


@pytest.fixture
def acceptance():
    """``record(criterion, ok, detail)``; verdicts are printed in the terminal summary."""

    def record(criterion: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
        print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_ACCEPTANCE):
        parts = _ACCEPTANCE[criterion]
        verdict = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        details = "; ".join(f"{d} [{'ok' if ok else 'fail'}]" for ok, d in parts)
        terminalreporter.write_line(f"criterion {criterion}: {verdict} | {details}")
