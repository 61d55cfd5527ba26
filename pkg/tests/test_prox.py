import numpy as np
import pytest

from graph_denoise.prox import batch_threshold, soft_threshold, soft_threshold_rows


class TestSoftThreshold:
    def test_examples(self):
        assert soft_threshold(3.0, 1.0) == 2.0
        assert soft_threshold(-0.5, 1.0) == 0.0

    def test_zero_eta_identity(self, rng):
        x = rng.standard_normal(20)
        np.testing.assert_array_equal(soft_threshold(x, 0.0), x)

    def test_relu_form(self, rng):
        x = rng.standard_normal(50) * 3
        relu = lambda v: np.maximum(v, 0)
        np.testing.assert_allclose(soft_threshold(x, 0.7), relu(x - 0.7) - relu(-x - 0.7), atol=1e-15)

    def test_negative_eta(self):
        with pytest.raises(ValueError):
            soft_threshold(1.0, -0.1)


class TestRows:
    def test_shrinks_row(self):
        np.testing.assert_allclose(soft_threshold_rows([[3.0, 4.0]], [1.0]), [[2.4, 3.2]])

    def test_kills_small_row(self):
        np.testing.assert_array_equal(soft_threshold_rows([[0.3, 0.4]], [1.0]), [[0.0, 0.0]])

    def test_zero_eta(self, rng):
        M = rng.standard_normal((5, 3))
        np.testing.assert_array_equal(soft_threshold_rows(M, np.zeros(5)), M)

    def test_zero_row(self):
        np.testing.assert_array_equal(soft_threshold_rows(np.zeros((2, 3)), [0.0, 2.0]), 0.0)

    def test_negative_eta(self):
        with pytest.raises(ValueError):
            soft_threshold_rows(np.ones((2, 2)), [1.0, -1.0])


class TestBatch:
    def test_zero_delta(self, rng):
        M = rng.standard_normal((4, 3))
        np.testing.assert_array_equal(batch_threshold(M, np.zeros_like(M)), M)

    def test_example(self):
        np.testing.assert_array_equal(batch_threshold([[2.0, -2.0]], [[1.0, 3.0]]), [[1.0, 0.0]])

    def test_constant_matches_scalar(self, rng):
        M = rng.standard_normal((6, 4))
        np.testing.assert_array_equal(batch_threshold(M, np.full_like(M, 0.3)), soft_threshold(M, 0.3))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            batch_threshold(np.ones((2, 2)), np.ones((2, 3)))

    def test_negative_entry(self):
        with pytest.raises(ValueError):
            batch_threshold(np.ones((1, 2)), [[0.1, -0.1]])
