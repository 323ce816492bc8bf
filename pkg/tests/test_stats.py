"""Moments and Sobol indices from coefficients against independent oracles."""
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import quadrature_stats
from rankpce.basis import BasisSpec, build_design_system
from rankpce.model import PceModel
from rankpce.regression import ElasticNetConfig
from rankpce.stats import (
    mean_from_model,
    partial_variance,
    sensitivity_report,
    sobol_index,
    total_index,
    variance_from_model,
)


def _model(terms, n=2, d=3):
    spec = BasisSpec.legendre(n, d)
    idx = np.array(list(terms.keys()), dtype=int).reshape(-1, n)
    return PceModel(spec, idx, np.array(list(terms.values()), dtype=float))


EXAMPLE = {(1, 0): 2.0, (0, 1): 3.0, (1, 1): 1.0}


class TestClosedForms:
    def test_zero_model(self):
        m = _model({})
        assert mean_from_model(m) == 0.0 and variance_from_model(m) == 0.0

    def test_constant_only(self):
        assert mean_from_model(_model({(0, 0): 2.5})) == 2.5

    def test_variance_example(self):
        assert variance_from_model(_model(EXAMPLE)) == pytest.approx(14.0)

    def test_partial_variances(self):
        m = _model(EXAMPLE)
        assert partial_variance(m, [0]) == pytest.approx(4.0)
        assert partial_variance(m, [0, 1]) == pytest.approx(1.0)
        assert sobol_index(m, [0]) == pytest.approx(4 / 14)

    def test_additive_symmetry(self):
        assert sobol_index(_model({(1, 0): 1.0, (0, 1): 1.0}), [1]) == pytest.approx(0.5)

    def test_total_index(self):
        assert total_index(_model(EXAMPLE), 0) == pytest.approx(5 / 14)

    def test_constant_model_errors(self):
        with pytest.raises(ValueError, match="constant model"):
            sobol_index(_model({(0, 0): 1.0}), [0])
        with pytest.raises(ValueError, match="constant model"):
            sensitivity_report(_model({(0, 0): 1.0}))

    def test_invalid_subset(self):
        with pytest.raises(ValueError):
            partial_variance(_model(EXAMPLE), [2])
        with pytest.raises(ValueError):
            partial_variance(_model(EXAMPLE), [])


def _fit_exact(f, n, d, rng):
    spec = BasisSpec.legendre(n, d)
    X = rng.uniform(-1, 1, (4 * spec.size + 20, n))
    s = build_design_system(spec, X, f(X))
    c = np.linalg.lstsq(s.design, s.y, rcond=None)[0]
    return PceModel.from_dense(spec, c)


class TestQuadratureOracle:
    def test_square_on_interval(self, rng):
        m = _fit_exact(lambda X: X[:, 0] ** 2, 1, 2, rng)
        assert mean_from_model(m) == pytest.approx(1 / 3, abs=1e-10)
        assert variance_from_model(m) == pytest.approx(4 / 45, abs=1e-10)
        assert m.as_dict()[(2,)] == pytest.approx(2 / (3 * math.sqrt(5)), abs=1e-10)

    @pytest.mark.parametrize("n, d, seed", [(1, 4, 0), (2, 3, 1), (2, 4, 2), (3, 2, 3), (3, 4, 4)])
    def test_random_polynomials(self, n, d, seed):
        g = np.random.default_rng(seed)
        exps = [e for e in itertools.product(range(d + 1), repeat=n) if sum(e) <= d]
        coef = g.normal(size=len(exps))

        def f(X):
            return sum(c * np.prod([X[:, k] ** e[k] for k in range(n)], axis=0) for c, e in zip(coef, exps))

        m = _fit_exact(f, n, d, g)
        mean, var, partial = quadrature_stats(f, n)
        assert mean_from_model(m) == pytest.approx(mean, abs=1e-8)
        assert variance_from_model(m) == pytest.approx(var, abs=1e-8)
        for S, v in partial.items():
            assert partial_variance(m, S) == pytest.approx(v, abs=1e-8)
            assert sobol_index(m, S) == pytest.approx(v / var, abs=1e-8)

    def test_product_function_against_monte_carlo(self):
        # g(x1) h(x2) with g = x1 + x1^2 and h = 1 + x2
        f = lambda X: (X[:, 0] + X[:, 0] ** 2) * (1.0 + X[:, 1])
        m = _fit_exact(f, 2, 3, np.random.default_rng(0))
        g = np.random.default_rng(1)
        n = 100_000
        A, B = g.uniform(-1, 1, (n, 2)), g.uniform(-1, 1, (n, 2))
        fA, fB = f(A), f(B)
        var = np.var(np.concatenate([fA, fB]))
        for k in range(2):
            ABk = A.copy()
            ABk[:, k] = B[:, k]
            first = np.mean(fB * (f(ABk) - fA)) / var  # pick-freeze estimator
            assert sobol_index(m, [k]) == pytest.approx(first, abs=0.02)


class TestReport:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1), st.integers(1, 30))
    def test_partition_of_variance(self, seed, k):
        g = np.random.default_rng(seed)
        spec = BasisSpec.legendre(4, 4)
        c = np.zeros(spec.size)
        c[g.choice(spec.size, size=min(k, spec.size), replace=False)] = g.normal(size=min(k, spec.size)) * 10 ** g.uniform(-3, 3)
        m = PceModel.from_dense(spec, c)
        var = variance_from_model(m)
        if var == 0:
            return
        total = sum(partial_variance(m, S) for r in range(1, 5) for S in itertools.combinations(range(4), r))
        assert abs(total - var) <= 1e-12 * var
        report = sensitivity_report(m, max_order=4)
        assert sum(report.sobol.values()) == pytest.approx(1.0, rel=1e-12)
        assert all(0.0 <= v <= 1.0 for v in report.sobol.values())

    def test_report_contents(self):
        r = sensitivity_report(_model(EXAMPLE), max_order=2, total=True)
        assert r.mean == 0.0 and r.variance == pytest.approx(14.0)
        assert set(r.sobol) == {(0,), (1,), (0, 1)}
        assert r.total[1] == pytest.approx(10 / 14)
        d = r.to_dict()
        assert d["sobol"][0] == {"subset": [0], "value": pytest.approx(4 / 14)}
        assert "total" in d
        assert "total" not in sensitivity_report(_model(EXAMPLE)).to_dict()

    def test_order_cap(self):
        m = _model({(1, 0, 0): 1.0, (1, 1, 1): 1.0}, n=3)
        assert (0, 1, 2) not in sensitivity_report(m, max_order=2).sobol
        assert (0, 1, 2) in sensitivity_report(m, max_order=3).sobol
