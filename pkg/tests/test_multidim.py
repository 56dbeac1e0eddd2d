import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dfgof.discretization import DiscreteDistribution
from dfgof.errors import AsymmetricGrids, DimensionMismatch, OutOfSupport
from dfgof.multidim import (Grid2D, SymIndexMap, counts_2d, cumulative_field, flatten_2d, pillow_increments,
                            pillow_operator, rectangle_indicator, symmetrize_colour_blind, unflatten_2d)
from dfgof.processes import simulate_bm_batch
from dfgof.rng import MomentAccumulator
from oracles import bridge_cov, union_indicator


def uniform_grid(n):
    d = DiscreteDistribution(np.arange(n, dtype=float), np.full(n, 1.0 / n), 0.0)
    return Grid2D.independent(d, d)


def skewed_grid():
    dx = DiscreteDistribution(np.array([0.0, 1.0, 2.0]), np.array([0.2, 0.3, 0.5]), 0.0)
    dy = DiscreteDistribution(np.array([0.0, 1.0, 2.0]), np.array([0.6, 0.3, 0.1]), 0.0)
    return Grid2D.independent(dx, dy)


class TestIndexing:
    def test_flatten_examples(self):
        assert flatten_2d(0, 0, 3) == 0
        assert flatten_2d(2, 2, 3) == 8
        assert flatten_2d(0, 1, 3) == 1
        assert unflatten_2d(4, 3) == (1, 1)

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            flatten_2d(3, 0, 3)
        with pytest.raises(IndexError):
            unflatten_2d(9, 3)

    @given(st.integers(1, 30).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n * n - 1))))
    def test_roundtrip(self, nk):
        n, k = nk
        assert flatten_2d(*unflatten_2d(k, n), n) == k

    def test_sym_index_map(self):
        m = SymIndexMap(4)
        assert m.size == 10
        assert m.index(2, 1) == m.index(1, 2)
        for k in range(m.size):
            assert m.index(*m.pair(k)) == k
        with pytest.raises(IndexError):
            m.index(0, 4)

    def test_sym_fold(self):
        m = SymIndexMap(3)
        h = np.arange(9.0).reshape(3, 3) / 36.0
        folded = m.fold_probs(h)
        assert folded.sum() == pytest.approx(1.0)
        assert folded[m.index(0, 1)] == pytest.approx((1 + 3) / 36.0)
        with pytest.raises(ValueError):
            m.fold(h)
        np.testing.assert_allclose(m.fold(h + h.T), [(h + h.T)[i, j] for i, j in m.pairs])


class TestGrid:
    def test_marginals_and_flat(self):
        g = skewed_grid()
        f, gm = g.marginals
        np.testing.assert_allclose(f, [0.2, 0.3, 0.5])
        np.testing.assert_allclose(gm, [0.6, 0.3, 0.1])
        assert g.flat_distribution().probs[flatten_2d(1, 2, 3)] == pytest.approx(0.03)

    def test_bad_shapes(self):
        with pytest.raises(DimensionMismatch):
            Grid2D(np.zeros(2), np.zeros(3), np.full((2, 3), 1 / 6))
        with pytest.raises(ValueError):
            Grid2D(np.arange(2.0), np.arange(2.0), np.full((2, 2), 0.3))

    def test_counts(self):
        g = uniform_grid(3)
        c = counts_2d([[0.5, 2.5], [1.0, 1.0], [2.9, 0.0]], g)
        assert c[0, 2] == 1 and c[1, 1] == 1 and c[2, 0] == 1 and c.sum() == 3
        with pytest.raises(OutOfSupport):
            counts_2d([[-1.0, 0.0]], g)


class TestRectangles:
    def test_indicator_example(self):
        g = uniform_grid(3)
        # a = x_2 and b = y_1 on atoms 0, 1, 2
        v = rectangle_indicator(2.0, 1.0, g).values.reshape(3, 3)
        assert {(i, j) for i, j in zip(*np.nonzero(v))} == {(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)}
        v = rectangle_indicator(1.0, 0.0, g).values.reshape(3, 3)
        assert {(i, j) for i, j in zip(*np.nonzero(v))} == {(0, 0), (1, 0)}

    def test_below_grid_is_empty(self):
        assert rectangle_indicator(-1.0, 5.0, uniform_grid(3)).values.sum() == 0

    def test_symmetrized_union_exhaustive(self):
        g = uniform_grid(4)
        xs = g.x_atoms
        for a, b in itertools.product(np.arange(-0.5, 4.0, 0.5), repeat=2):
            got = symmetrize_colour_blind(a, b, g).values
            np.testing.assert_array_equal(got, union_indicator(a, b, xs, xs))
            np.testing.assert_array_equal(got, symmetrize_colour_blind(b, a, g).values)

    def test_symmetrized_is_swap_invariant(self):
        g = uniform_grid(5)
        v = symmetrize_colour_blind(1.0, 3.0, g).values.reshape(5, 5)
        np.testing.assert_array_equal(v, v.T)
        SymIndexMap(5).fold(v)

    def test_asymmetric_grids(self):
        dx = DiscreteDistribution(np.array([0.0, 1.0]), np.array([0.5, 0.5]), 0.0)
        dy = DiscreteDistribution(np.array([0.0, 2.0]), np.array([0.5, 0.5]), 0.0)
        with pytest.raises(AsymmetricGrids):
            symmetrize_colour_blind(0.0, 1.0, Grid2D.independent(dx, dy))


class TestPillow:
    def test_zero_input(self):
        g = skewed_grid()
        np.testing.assert_array_equal(pillow_increments(np.zeros(9), g), np.zeros(9))

    def test_dimension_check(self):
        with pytest.raises(DimensionMismatch):
            pillow_increments(np.zeros(8), skewed_grid())

    def test_idempotent(self):
        P = pillow_operator(skewed_grid()).matrix
        np.testing.assert_allclose(P @ P, P, atol=1e-14)

    def test_tied_down_on_far_edges(self, rng):
        g = skewed_grid()
        dw = rng.standard_normal((50, 9)) * np.sqrt(g.probs.ravel())
        field = cumulative_field(pillow_increments(dw, g), 3)
        np.testing.assert_allclose(field[:, -1, :], 0.0, atol=1e-13)
        np.testing.assert_allclose(field[:, :, -1], 0.0, atol=1e-13)

    def test_product_form_covariance(self):
        g = skewed_grid()
        f, gm = g.marginals
        acc = MomentAccumulator(9)
        for start in range(0, 100_000, 20_000):
            dw = simulate_bm_batch(g.probs.ravel(), 33, start, 20_000)
            acc.add(cumulative_field(pillow_increments(dw, g), 3).reshape(-1, 9))
        expected = np.kron(bridge_cov(f), bridge_cov(gm))
        inner = np.array([i < 2 and j < 2 for i in range(3) for j in range(3)])
        box = np.ix_(inner, inner)
        assert np.all(np.abs(acc.covariance - expected)[box] <= 5 * acc.standard_error[box])
        np.testing.assert_allclose(acc.covariance[~inner], 0.0, atol=1e-15)
