"""Orthonormal families, multi-index dictionaries and design systems."""
import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite_e, legendre

from conftest import hermite_oracle, legendre_oracle
from rankpce.basis import (
    BasisSpec,
    PolynomialFamily,
    build_design_system,
    chebyshev_node,
    design_matrix,
    eval_basis,
    eval_univariate,
    generate_multi_indices,
    sample_inputs,
    univariate_table,
)

MAX_DEG = 8


class TestUnivariate:
    def test_spec_examples(self):
        assert eval_univariate(PolynomialFamily.legendre(), 0, 0.37) == pytest.approx(1.0)
        assert eval_univariate(PolynomialFamily.legendre(), 1, 1.0) == pytest.approx(math.sqrt(3.0))
        assert eval_univariate(PolynomialFamily.hermite(), 2, 0.0) == pytest.approx(-1.0 / math.sqrt(2.0))

    @pytest.mark.parametrize("k", range(MAX_DEG + 1))
    def test_matches_numpy_evaluators(self, k):
        x = np.linspace(-1.0, 1.0, 17)
        table = univariate_table(PolynomialFamily.legendre(), k, x)
        np.testing.assert_allclose(table[:, k], legendre_oracle(k, x), atol=1e-12)
        z = np.linspace(-4.0, 4.0, 17)
        table = univariate_table(PolynomialFamily.hermite(), k, z)
        np.testing.assert_allclose(table[:, k], hermite_oracle(k, z), rtol=1e-12, atol=1e-12)

    def test_legendre_orthonormal_by_gauss_quadrature(self):
        x, w = legendre.leggauss(30)
        P = univariate_table(PolynomialFamily.legendre(), MAX_DEG, x)
        gram = P.T @ (P * (w / 2.0)[:, None])
        np.testing.assert_allclose(gram, np.eye(MAX_DEG + 1), atol=1e-10)

    def test_hermite_orthonormal_by_gauss_quadrature(self):
        x, w = hermite_e.hermegauss(30)
        P = univariate_table(PolynomialFamily.hermite(), MAX_DEG, x)
        gram = P.T @ (P * (w / math.sqrt(2.0 * math.pi))[:, None])
        np.testing.assert_allclose(gram, np.eye(MAX_DEG + 1), atol=1e-10)

    @pytest.mark.parametrize("levels", [1, 2, 3, 5, 9, 12])
    def test_categorical_orthonormal_by_node_sum(self, levels):
        fam = PolynomialFamily.categorical(levels)
        top = min(MAX_DEG, levels - 1)
        P = univariate_table(fam, top, fam.nodes())
        gram = P.T @ P / levels
        np.testing.assert_allclose(gram, np.eye(top + 1), atol=1e-10)

    def test_categorical_is_scaled_chebyshev(self):
        fam = PolynomialFamily.categorical(6)
        x = fam.nodes()
        P = univariate_table(fam, 5, x)
        theta = np.arccos(x)
        for k in range(1, 6):
            np.testing.assert_allclose(P[:, k], math.sqrt(2.0) * np.cos(k * theta), atol=1e-12)

    def test_categorical_degree_cap_and_off_node(self):
        fam = PolynomialFamily.categorical(3)
        with pytest.raises(ValueError, match="cap"):
            univariate_table(fam, 3, fam.nodes())
        with pytest.raises(ValueError, match="not a Chebyshev node"):
            univariate_table(fam, 1, np.array([0.5]))
        # within the node tolerance is accepted
        univariate_table(fam, 1, fam.nodes() + 1e-12)

    @pytest.mark.parametrize(
        "m, levels, expected",
        [(1, 1, 0.0), (1, 2, math.sqrt(2) / 2), (1, 10, math.cos(math.pi / 20))],
    )
    def test_chebyshev_node(self, m, levels, expected):
        assert chebyshev_node(m, levels) == pytest.approx(expected, abs=1e-15)

    def test_chebyshev_node_range(self):
        with pytest.raises(ValueError):
            chebyshev_node(0, 3)
        with pytest.raises(ValueError):
            chebyshev_node(4, 3)

    def test_family_validation(self):
        with pytest.raises(ValueError):
            PolynomialFamily("laguerre")
        with pytest.raises(ValueError):
            PolynomialFamily("legendre", 3)
        with pytest.raises(ValueError):
            PolynomialFamily.categorical(0)


class TestMultiIndices:
    @pytest.mark.parametrize("n, d, count", [(1, 3, 4), (3, 10, 286), (10, 8, 43758)])
    def test_spec_counts(self, n, d, count):
        assert BasisSpec.legendre(n, d).size == count

    def test_counts_match_binomial(self):
        for n in range(1, 11):
            for d in range(0, 9):
                assert len(generate_multi_indices(BasisSpec.legendre(n, d))) == math.comb(n + d, n)

    @pytest.mark.parametrize("n, d", [(1, 6), (2, 5), (3, 4), (4, 6)])
    def test_graded_lex_against_brute_force(self, n, d):
        grid = [a for a in itertools.product(range(d + 1), repeat=n) if sum(a) <= d]
        expected = sorted(grid, key=lambda a: (sum(a), a))
        got = [tuple(r) for r in generate_multi_indices(BasisSpec.legendre(n, d))]
        assert got == expected
        keys = [(sum(a), a) for a in got]
        assert all(k1 < k2 for k1, k2 in zip(keys, keys[1:]))

    def test_categorical_caps(self):
        spec = BasisSpec((PolynomialFamily.legendre(), PolynomialFamily.categorical(2)), 3)
        idx = generate_multi_indices(spec)
        assert idx[:, 1].max() == 1
        # degree <= 3 pairs with second entry <= 1
        assert len(idx) == 4 + 3

    def test_position_and_json_round_trip(self):
        spec = BasisSpec(
            (PolynomialFamily.legendre(), PolynomialFamily.hermite(), PolynomialFamily.categorical(3)), 4
        )
        for j, row in enumerate(spec.indices):
            assert spec.position(row) == j
        again = BasisSpec.from_json(spec.to_json())
        assert again == spec
        np.testing.assert_array_equal(again.indices, spec.indices)

    def test_indices_read_only(self):
        with pytest.raises(ValueError):
            BasisSpec.legendre(2, 2).indices[0, 0] = 5


class TestEvalBasis:
    def test_spec_examples(self):
        spec = BasisSpec.legendre(2, 3)
        assert eval_basis(spec, (0, 0), (0.3, -0.9)) == pytest.approx(1.0)
        assert eval_basis(spec, (1, 1), (1.0, 1.0)) == pytest.approx(3.0)
        assert eval_basis(spec, (1, 0), (0.5, 0.9)) == pytest.approx(math.sqrt(3) * 0.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            eval_basis(BasisSpec.legendre(2, 2), (1, 0, 0), (0.1, 0.2))

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.floats(-1, 1), min_size=3, max_size=3))
    def test_design_row_matches_pointwise_product(self, x):
        spec = BasisSpec.legendre(3, 4)
        row = design_matrix(spec, np.array([x]))[0]
        for j, alpha in enumerate(spec.indices):
            expected = np.prod([legendre_oracle(int(a), xk) for a, xk in zip(alpha, x)])
            assert row[j] == pytest.approx(expected, abs=1e-11)

    def test_row_blocking_does_not_change_values(self, rng):
        spec = BasisSpec.legendre(2, 3)
        X = rng.uniform(-1, 1, (1300, 2))
        full = design_matrix(spec, X)
        np.testing.assert_array_equal(full[700:710], design_matrix(spec, X[700:710]))
        np.testing.assert_allclose(design_matrix(spec, X, squared=True), full**2, rtol=1e-14)


class TestDesignSystem:
    def test_constant_basis_example(self):
        s = build_design_system(BasisSpec.legendre(1, 0), np.zeros((3, 1)), [1.0, 2.0, 3.0])
        np.testing.assert_allclose(s.gram, [[1.0]])
        np.testing.assert_allclose(s.moment, [2.0])

    def test_gram_is_symmetric_psd(self, rng):
        s = build_design_system(BasisSpec.legendre(2, 4), rng.uniform(-1, 1, (50, 2)), rng.normal(size=50))
        np.testing.assert_allclose(s.gram, s.gram.T)
        assert np.linalg.eigvalsh(s.gram).min() > -1e-12
        np.testing.assert_allclose(s.column_sq_norms, np.diag(s.gram))

    def test_moment_of_single_basis_function(self, rng):
        spec = BasisSpec.legendre(2, 3)
        B = spec.position((1, 2))
        X = rng.uniform(-1, 1, (10_000, 2))
        y = design_matrix(spec, X)[:, B]
        s = build_design_system(spec, X, y)
        assert s.moment[B] == pytest.approx(1.0, abs=5 / math.sqrt(10_000) * 3)

    def test_gram_deviation_scales_like_inverse_sqrt_n(self):
        spec = BasisSpec.legendre(2, 2)
        scaled = {100: [], 400: []}
        for seed in range(20):
            rng = np.random.default_rng(seed)
            for n in scaled:
                s = build_design_system(spec, sample_inputs(spec, n, rng), np.zeros(n))
                scaled[n].append(np.max(np.abs(s.gram - np.eye(spec.size))) * math.sqrt(n))
        # sqrt(N)-scaled deviation stays of the same size when N quadruples
        ratio = np.median(scaled[400]) / np.median(scaled[100])
        assert 0.5 < ratio < 2.0

    def test_input_validation(self):
        spec = BasisSpec.legendre(1, 2)
        with pytest.raises(ValueError, match="rows"):
            build_design_system(spec, np.zeros((3, 1)), np.zeros(2))
        with pytest.raises(ValueError, match="non-finite"):
            build_design_system(spec, np.array([[np.nan]]), [1.0])
        with pytest.raises(ValueError, match="columns"):
            design_matrix(spec, np.zeros((3, 2)))

    def test_sample_inputs_respects_families(self, rng):
        spec = BasisSpec((PolynomialFamily.legendre(), PolynomialFamily.hermite(), PolynomialFamily.categorical(4)), 2)
        X = sample_inputs(spec, 2000, rng)
        assert np.all(np.abs(X[:, 0]) <= 1)
        assert abs(X[:, 1].std() - 1) < 0.1
        assert set(np.round(X[:, 2], 12)) == set(np.round(spec.families[2].nodes(), 12))
