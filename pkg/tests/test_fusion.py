import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cefusion.exceptions import ParameterError, ShapeError
from cefusion.fusion import (
    V_GRID,
    FusionParameters,
    check_model_weights,
    check_weight_matrix,
    dirichlet_fuse,
    first_weighting,
    hierarchical_fuse,
    is_grid_value,
    sample_model_weights,
    sample_weight_matrix,
)
from oracles import fuse_brute

UNIFORM = np.full(7, 1 / 7)


class TestSampleWeightMatrix:
    def test_columns_stochastic(self):
        w = sample_weight_matrix(42, 3, 1.0)
        assert w.shape == (3, 7)
        np.testing.assert_allclose(w.sum(axis=0), 1.0, atol=1e-9)

    def test_single_model_is_all_ones(self):
        for seed in range(5):
            assert np.array_equal(sample_weight_matrix(seed, 1, 1.0), np.ones((1, 7)))

    def test_seeded_determinism(self):
        a = sample_weight_matrix(7, 3, 1.0)
        b = sample_weight_matrix(7, 3, 1.0)
        assert a.tobytes() == b.tobytes()
        assert not np.array_equal(a, sample_weight_matrix(8, 3, 1.0))

    @pytest.mark.parametrize("m,alpha", [(0, 1.0), (3, 0.0), (3, -1.0)])
    def test_bad_parameters(self, m, alpha):
        with pytest.raises(ParameterError):
            sample_weight_matrix(0, m, alpha)

    def test_ten_thousand_samples(self):
        ss = np.random.SeedSequence(2024)
        mats = np.stack([sample_weight_matrix(s, 3, 1.0) for s in ss.spawn(10_000)])
        assert np.all(mats >= 0)
        assert np.max(np.abs(mats.sum(axis=1) - 1)) <= 1e-9

    def test_small_alpha_concentrates_on_vertices(self):
        w = np.stack([sample_weight_matrix(s, 3, 0.05) for s in range(200)])
        assert np.mean(w.max(axis=1)) > 0.9


def test_model_weight_grid():
    assert V_GRID.size == 99
    assert V_GRID[0] == 0.01 and V_GRID[-1] == 0.5
    np.testing.assert_allclose(np.diff(V_GRID), 0.005, atol=1e-15)
    v = sample_model_weights(3, 1000)
    assert np.all(is_grid_value(v))
    assert not is_grid_value(0.0125)
    assert not is_grid_value(0.505)
    with pytest.raises(ParameterError):
        check_model_weights([0.2, 0.6])


class TestFirstWeighting:
    def test_identity(self):
        np.testing.assert_array_equal(first_weighting(UNIFORM, np.ones(7)), UNIFORM)

    def test_annihilation(self, rng):
        p = rng.dirichlet(np.ones(7))
        np.testing.assert_array_equal(first_weighting(p, np.zeros(7)), np.zeros(7))

    def test_hand_example(self):
        p = [0.2, 0.1, 0.1, 0.1, 0.3, 0.1, 0.1]
        out = first_weighting(p, np.full(7, 0.5))
        np.testing.assert_allclose(out, [0.1, 0.05, 0.05, 0.05, 0.15, 0.05, 0.05], atol=1e-15)

    def test_shape_errors(self):
        with pytest.raises(ShapeError):
            first_weighting(np.ones(6), np.ones(7))
        with pytest.raises(ShapeError):
            first_weighting(np.ones((2, 7)), np.ones((3, 7)))

    @given(arrays(float, 7, elements=st.floats(0, 1)), arrays(float, 7, elements=st.floats(0.01, 1)),
           st.integers(0, 6), st.floats(1e-3, 1))
    def test_monotone(self, p, w, c, bump):
        q = p.copy()
        q[c] += bump
        assert first_weighting(q, w)[c] > first_weighting(p, w)[c]


class TestDirichletFuse:
    def test_equal_inputs_give_input(self):
        w = sample_weight_matrix(1, 3)
        fused = dirichlet_fuse(first_weighting(np.tile(UNIFORM, (3, 1)), w))
        np.testing.assert_allclose(fused, UNIFORM, atol=1e-15)

    def test_single_model_identity(self, rng):
        p = rng.dirichlet(np.ones(7))
        np.testing.assert_array_equal(dirichlet_fuse(first_weighting(p[None], np.ones((1, 7)))), p)

    def test_class_mass_can_vanish(self):
        p = np.zeros((2, 7))
        p[0, 0] = 1.0  # model 1: one-hot Neutral
        p[1, 1] = 1.0  # model 2: one-hot Anger
        w = np.full((2, 7), 0.5)
        w[:, 0] = [0.0, 1.0]
        w[:, 1] = [1.0, 0.0]
        fused = dirichlet_fuse(first_weighting(p, w))
        assert fused[0] == 0.0 and fused[1] == 0.0

    def test_empty(self):
        with pytest.raises(ParameterError):
            dirichlet_fuse(np.zeros((0, 7)))

    @settings(max_examples=200)
    @given(st.integers(1, 5), st.integers(0, 2**32 - 1))
    def test_bounded_by_model_extremes(self, m, seed):
        r = np.random.default_rng(seed)
        p = r.dirichlet(np.ones(7), size=m)
        w = sample_weight_matrix(r, m)
        fused = dirichlet_fuse(first_weighting(p, w))
        assert np.all(fused <= p.max(axis=0) + 1e-12)
        assert np.all(fused >= p.min(axis=0) * w.min() - 1e-12)


class TestHierarchicalFuse:
    def test_factorization(self, rng):
        u = rng.random(7)
        np.testing.assert_allclose(hierarchical_fuse(np.stack([u, u]), [0.2, 0.3]), 0.5 * u, atol=1e-15)

    def test_grid_minimum_scales_sum(self, rng):
        pw = rng.random((3, 7))
        np.testing.assert_allclose(hierarchical_fuse(pw, np.full(3, 0.01)), 0.01 * dirichlet_fuse(pw), atol=1e-15)

    def test_matches_brute_force(self):
        r = np.random.default_rng(99)
        for _ in range(50):
            p = r.dirichlet(np.ones(7), size=3)
            w = sample_weight_matrix(r, 3)
            v = sample_model_weights(r, 3)
            got = hierarchical_fuse(first_weighting(p, w), v)
            assert np.max(np.abs(got - fuse_brute(p.tolist(), w.tolist(), v.tolist()))) <= 1e-12

    def test_linear_in_model_weights(self, rng):
        pw = rng.random((3, 7))
        v = np.array([0.1, 0.2, 0.25])
        np.testing.assert_allclose(hierarchical_fuse(pw, 2 * v), 2 * hierarchical_fuse(pw, v), rtol=1e-15)

    @given(st.integers(0, 2**32 - 1), st.floats(0.01, 100))
    def test_argmax_scale_invariant(self, seed, a):
        r = np.random.default_rng(seed)
        pw = first_weighting(r.dirichlet(np.ones(7), size=3), sample_weight_matrix(r, 3))
        v = sample_model_weights(r, 3)
        assert np.argmax(hierarchical_fuse(pw, v)) == np.argmax(hierarchical_fuse(pw, a * v))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            hierarchical_fuse(np.ones((3, 7)), [0.1, 0.2])


class TestFusionParameters:
    def test_uniform(self):
        p = FusionParameters.uniform(["a", "b", "c"])
        np.testing.assert_allclose(p.weight_matrix, 1 / 3)
        assert p.model_weights.tolist() == [0.5, 0.5, 0.5]

    def test_streams_fuse(self, rng):
        probs = rng.dirichlet(np.ones(7), size=(10, 3))
        w = sample_weight_matrix(3, 3)
        v = np.array([0.01, 0.2, 0.5])
        hp = FusionParameters(w, v, ("a", "b", "c"), "hierarchical")
        dp = FusionParameters(w, v, ("a", "b", "c"), "dirichlet")
        for i in range(10):
            np.testing.assert_allclose(hp.fuse(probs)[i], fuse_brute(probs[i], w, v), atol=1e-15)
            np.testing.assert_allclose(dp.fuse(probs)[i], fuse_brute(probs[i], w), atol=1e-15)

    def test_invariants(self):
        with pytest.raises(ShapeError):
            FusionParameters(np.full((2, 7), 0.5), [0.5, 0.5, 0.5], ("a", "b", "c"))
        with pytest.raises(ParameterError):
            FusionParameters(np.full((2, 7), 0.4), [0.5, 0.5], ("a", "b"))
        with pytest.raises(ParameterError):
            FusionParameters(np.full((2, 7), 0.5), [0.5, 0.5], ("a", "a"))
        with pytest.raises(ParameterError):
            FusionParameters(np.full((2, 7), 0.5), [0.5, 0.5], ("a", "b"), mode="mean")

    def test_check_weight_matrix(self):
        with pytest.raises(ShapeError):
            check_weight_matrix(np.ones(7))
        with pytest.raises(ParameterError):
            check_weight_matrix(np.array([[1.5] * 7, [-0.5] * 7]))
