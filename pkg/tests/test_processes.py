import numpy as np
import pytest
from hypothesis import given, strategies as st

from dfgof.discretization import CellCounts, DiscreteDistribution
from dfgof.errors import DimensionMismatch, SpaceMismatch
from dfgof.operators import big_pi, embed_L, rotation_vk
from dfgof.processes import (DualFunction, ProcessIncrements, bm_increments_from_normals, cumulative_path,
                             empirical_increments, eval_functional, heaviside, primal_rotation,
                             project_increments, rotate_functional, simulate_bm_batch, simulate_bm_increments)
from dfgof.rng import MomentAccumulator, replicate_stream, standard_normals
from dfgof.verify import random_instance
from oracles import bm_cov, bridge_cov

REPS = 100_000
P10 = np.random.default_rng(7).dirichlet(np.full(10, 2.0))


@pytest.fixture(scope="module")
def bm_batch():
    return simulate_bm_batch(P10, 2024, 0, REPS)


def within(acc: MomentAccumulator, expected, k=4.0):
    z = np.abs(acc.covariance - expected) / acc.standard_error
    return float(np.max(z)), bool(np.all(z <= k))


class TestBrownianMotion:
    def test_zero_draw(self):
        dw = bm_increments_from_normals(P10, np.zeros(10))
        np.testing.assert_array_equal(dw.values, np.zeros(10))
        assert dw.kind == "bm"

    def test_deterministic_and_order_free(self):
        a = simulate_bm_increments(P10, 3, 17).values
        b = simulate_bm_increments(P10, 3, 17).values
        np.testing.assert_array_equal(a, b)
        np.testing.assert_array_equal(simulate_bm_batch(P10, 3, 15, 5)[2], a)
        assert not np.array_equal(a, simulate_bm_increments(P10, 3, 18).values)
        assert not np.array_equal(a, simulate_bm_increments(P10, 4, 17).values)

    def test_cell_variance(self, bm_batch):
        acc = MomentAccumulator(10).add(bm_batch)
        z = np.abs(np.diag(acc.covariance) - P10) / np.diag(acc.standard_error)
        assert z.max() <= 4.0

    def test_terminal_variance(self, bm_batch):
        w = bm_batch.sum(axis=1)
        se = np.std(w * w) / np.sqrt(REPS)
        assert abs(np.mean(w * w) - 1.0) <= 4 * se

    def test_path_covariance(self, bm_batch):
        acc = MomentAccumulator(10).add(np.cumsum(bm_batch, axis=1))
        zmax, ok = within(acc, bm_cov(P10))
        assert ok, zmax

    def test_normals_are_standard(self):
        z = standard_normals(replicate_stream(1, 0), 200_000)
        assert abs(z.mean()) < 4 / np.sqrt(2e5)
        assert abs(z.var() - 1) < 4 * np.sqrt(2 / 2e5)


class TestProjection:
    def test_two_cell_hand_value(self):
        a, b = 0.3, -1.1
        dw = bm_increments_from_normals([0.5, 0.5], np.array([a, b]) / np.sqrt(0.5))
        dv = project_increments(dw, big_pi([0.5, 0.5], np.ones((1, 2))))
        np.testing.assert_allclose(dv.values, [(a - b) / 2, (b - a) / 2], atol=1e-15)
        assert dv.kind == "projected"

    def test_bridge_covariance_and_tie_down(self, bm_batch):
        Pi = big_pi(P10, np.ones((1, 10))).matrix
        paths = np.cumsum(bm_batch @ Pi.T, axis=1)
        assert np.max(np.abs(paths[:, -1])) <= 1e-12
        acc = MomentAccumulator(9).add(paths[:, :-1])
        zmax, ok = within(acc, bridge_cov(P10)[:-1, :-1])
        assert ok, zmax

    def test_increment_variance_on_merged_cells(self, bm_batch):
        Pi = big_pi(P10, np.ones((1, 10))).matrix
        dv = bm_batch @ Pi.T
        for a, b in [(0, 3), (3, 4), (5, 10)]:
            x = dv[:, a:b].sum(axis=1)
            P = P10[a:b].sum()
            assert abs(np.mean(x * x) - (P - P * P)) <= 4 * np.std(x * x) / np.sqrt(REPS)

    @given(st.integers(0, 2**32 - 1))
    def test_scores_annihilated(self, seed):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng)
        dist = DiscreteDistribution.from_probs(inst["p"])
        dw = bm_increments_from_normals(dist, rng.standard_normal(inst["N"]))
        dv = project_increments(dw, big_pi(inst["p"], inst["q"]))
        scale = max(1.0, np.max(np.abs(inst["q"])))
        assert np.max(np.abs(inst["q"] @ dv.values)) <= 1e-10 * scale

    @given(st.integers(0, 2**32 - 1))
    def test_dual_primal(self, seed):
        rng = np.random.default_rng(seed)
        inst = random_instance(rng)
        dist = DiscreteDistribution.from_probs(inst["p"])
        Pi = big_pi(inst["p"], inst["q"])
        dw = bm_increments_from_normals(dist, rng.standard_normal(inst["N"]))
        phi = rng.standard_normal(inst["N"])
        lhs = eval_functional(DualFunction(phi, dist), project_increments(dw, Pi))
        rhs = eval_functional(DualFunction(Pi.T @ phi, dist), dw)
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    def test_functional_covariance(self, bm_batch):
        rng = np.random.default_rng(5)
        D = np.diag(P10)
        Pi = big_pi(P10, np.ones((1, 10))).matrix
        dv = bm_batch @ Pi.T
        phi, psi = rng.standard_normal(10), rng.standard_normal(10)
        closed = phi @ D @ psi - (phi @ P10) * (psi @ P10)
        assert abs(phi @ Pi @ D @ Pi.T @ psi - closed) <= 1e-12
        prod = (dv @ phi) * (dv @ psi)
        assert abs(prod.mean() - closed) <= 4 * prod.std() / np.sqrt(REPS)

    def test_mismatched_weight(self):
        dw = bm_increments_from_normals([0.5, 0.5], [1.0, 2.0])
        with pytest.raises(SpaceMismatch):
            project_increments(dw, big_pi([0.4, 0.6], np.ones((1, 2))))
        with pytest.raises(DimensionMismatch):
            project_increments(dw, big_pi([0.2, 0.3, 0.5], np.ones((1, 3))))


class TestEmpirical:
    def test_exact_counts(self):
        dv = empirical_increments(CellCounts([20, 30, 50]), [0.2, 0.3, 0.5])
        np.testing.assert_allclose(dv.values, 0.0, atol=1e-15)

    def test_hand_value(self):
        np.testing.assert_allclose(empirical_increments(CellCounts([60, 40]), [0.5, 0.5]).values, [1, -1])

    @given(st.lists(st.integers(0, 50), min_size=2, max_size=20).filter(lambda c: sum(c) > 0),
           st.integers(0, 2**32 - 1))
    def test_sums_to_zero(self, counts, seed):
        p = np.random.default_rng(seed).dirichlet(np.ones(len(counts)))
        assert abs(empirical_increments(CellCounts(counts), p).values.sum()) <= 1e-12 * max(1, sum(counts))

    def test_empty_sample(self):
        with pytest.raises(ValueError):
            empirical_increments(CellCounts([0, 0]), [0.5, 0.5])


class TestFunctionals:
    grid = DiscreteDistribution(np.array([0.0, 0.5, 0.9]), np.array([0.2, 0.3, 0.5]), 0.0)

    def test_heaviside(self):
        np.testing.assert_array_equal(heaviside(0.0, self.grid).values, [0, 0, 0])
        np.testing.assert_array_equal(heaviside(1.0, self.grid).values, [1, 1, 1])
        np.testing.assert_array_equal(heaviside(0.5, self.grid).values, [1, 0, 0])

    def test_heaviside_recovers_path(self, rng):
        dv = bm_increments_from_normals(self.grid, rng.standard_normal(3))
        path = cumulative_path(dv)
        for j, t in enumerate([0.4, 0.6, 5.0]):
            assert eval_functional(heaviside(t, self.grid), dv) == pytest.approx(path[j], abs=1e-15)

    def test_constant_on_bridge(self, rng):
        dw = bm_increments_from_normals(self.grid, rng.standard_normal(3))
        dv = project_increments(dw, big_pi(self.grid.probs, np.ones((1, 3))))
        assert abs(eval_functional(DualFunction(np.ones(3), self.grid), dv)) <= 1e-15

    def test_basis_vector(self, rng):
        dv = bm_increments_from_normals(self.grid, rng.standard_normal(3))
        assert eval_functional(DualFunction([0, 1, 0], self.grid), dv) == dv.values[1]

    def test_space_mismatch(self):
        other = DiscreteDistribution(np.array([0.0, 0.5, 0.9]), np.array([0.3, 0.3, 0.4]), 0.0)
        dv = bm_increments_from_normals(self.grid, np.ones(3))
        with pytest.raises(SpaceMismatch):
            eval_functional(DualFunction(np.ones(3), other), dv)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            DualFunction([np.nan, 0, 0], self.grid)


def rotation_setup(seed, N=8, K=2):
    rng = np.random.default_rng(seed)
    inst = random_instance(rng, N=N, K=K)
    p, r = inst["p"], inst["r"]
    return inst, rotation_vk(inst["q"], inst["s"], p, r), embed_L(p, r), big_pi(p, inst["q"])


class TestRotation:
    def test_first_target_score_gives_zero(self, rng):
        inst, V, L, Pi = rotation_setup(11)
        pdist = DiscreteDistribution.from_probs(inst["p"])
        dv = project_increments(bm_increments_from_normals(pdist, rng.standard_normal(8)), Pi)
        rdist = DiscreteDistribution.from_probs(inst["r"])
        for s in inst["s"]:
            assert abs(rotate_functional(DualFunction(s, rdist), V, L, dv)) <= 1e-12

    def test_trivial_rotation(self, rng):
        p = rng.dirichlet(np.ones(5))
        one = np.ones((1, 5))
        V, L = rotation_vk(one, one, p, p), embed_L(p, p)
        dist = DiscreteDistribution.from_probs(p)
        dv = project_increments(bm_increments_from_normals(dist, rng.standard_normal(5)), big_pi(p, one))
        psi = rng.standard_normal(5)
        assert rotate_functional(DualFunction(psi, dist), V, L, dv) == pytest.approx(
            eval_functional(DualFunction(psi, dist), dv), abs=1e-15)
        np.testing.assert_allclose(primal_rotation(dv, V, L).values, dv.values, atol=1e-15)

    @given(st.integers(0, 2**32 - 1))
    def test_primal_matches_dual(self, seed):
        inst, V, L, Pi = rotation_setup(seed)
        rng = np.random.default_rng(seed + 1)
        pdist, rdist = DiscreteDistribution.from_probs(inst["p"]), DiscreteDistribution.from_probs(inst["r"])
        dv = project_increments(bm_increments_from_normals(pdist, rng.standard_normal(8)), Pi)
        out = primal_rotation(dv, V, L, rdist)
        assert out.kind == "rotated"
        psi = rng.standard_normal(8)
        a = eval_functional(DualFunction(psi, rdist), out)
        b = rotate_functional(DualFunction(psi, rdist), V, L, dv)
        assert abs(a - b) <= 1e-12 * max(1.0, abs(a))
        assert np.max(np.abs(inst["s"] @ out.values)) <= 1e-9

    @given(st.integers(0, 2**32 - 1))
    def test_exact_rotated_covariance(self, seed):
        inst, V, L, Pi = rotation_setup(seed)
        Dr = np.diag(inst["r"])
        lhs = L.matrix @ V.T @ Pi.matrix @ np.diag(inst["p"]) @ V.matrix @ L.matrix
        rhs = Dr - sum(Dr @ np.outer(s, s) @ Dr for s in inst["s"])
        assert np.max(np.abs(lhs - rhs)) <= 1e-9

    def test_rotated_functional_covariance_mc(self):
        inst, V, L, Pi = rotation_setup(13, N=6, K=1)
        reps = 50_000
        dv = simulate_bm_batch(inst["p"], 99, 0, reps) @ Pi.matrix.T
        rng = np.random.default_rng(3)
        psi, chi = rng.standard_normal(6), rng.standard_normal(6)
        a = dv @ (V @ (L @ psi))
        b = dv @ (V @ (L @ chi))
        Dr = np.diag(inst["r"])
        closed = psi @ (Dr - sum(Dr @ np.outer(s, s) @ Dr for s in inst["s"])) @ chi
        prod = a * b
        assert abs(prod.mean() - closed) <= 4 * prod.std() / np.sqrt(reps)

    def test_norm_preservation(self, rng):
        inst, V, L, _ = rotation_setup(17, N=20, K=4)
        psi = rng.standard_normal(20)
        lhs = np.sqrt((V @ (L @ psi)) @ (inst["p"] * (V @ (L @ psi))))
        rhs = np.sqrt(psi @ (inst["r"] * psi))
        assert abs(lhs - rhs) <= 1e-10 * rhs

    def test_size_mismatch(self, rng):
        inst, V, L, _ = rotation_setup(19)
        dv = bm_increments_from_normals([0.5, 0.5], [1.0, 1.0])
        with pytest.raises(DimensionMismatch):
            primal_rotation(dv, V, L)


class TestAccumulator:
    def test_merge_associative(self, rng):
        rows = rng.standard_normal((30, 3))
        whole = MomentAccumulator(3).add(rows)
        a, b, c = (MomentAccumulator(3).add(rows[s]) for s in (slice(0, 7), slice(7, 20), slice(20, 30)))
        left, right = a.merge(b).merge(c), c.merge(a.merge(b))
        for m in (left, right):
            assert m.count == 30
            np.testing.assert_allclose(m.covariance, whole.covariance, rtol=1e-13)
            np.testing.assert_allclose(m.standard_error, whole.standard_error, rtol=1e-12)

    def test_process_kind_and_length(self):
        with pytest.raises(ValueError):
            ProcessIncrements(np.zeros(2), DiscreteDistribution.from_probs([0.5, 0.5]), "levy")
        with pytest.raises(DimensionMismatch):
            ProcessIncrements(np.zeros(3), DiscreteDistribution.from_probs([0.5, 0.5]), "bm")
