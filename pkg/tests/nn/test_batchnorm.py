"""Tests for BatchNorm forward, running statistics and both gradient modes."""
import numpy as np
import pytest

from gia_lab.autodiff import Graph, check_gradient, check_second_order
from gia_lab.core.exceptions import PreconditionError, ShapeError
from gia_lab.core.models import BNMode, LayerStats
from gia_lab.nn import (BNState, batch_statistics, batchnorm_forward, batchnorm_layer, bn_input_grad_inference,
                        bn_input_grad_training, update_running_stats)


class TestBNState:
    """Validation of layer state."""

    def test_initial_state(self):
        """gamma=1, beta=0, running mean 0 and variance 1."""
        state = BNState.initial(3)

        np.testing.assert_array_equal(state.gamma, np.ones(3))
        np.testing.assert_array_equal(state.beta, np.zeros(3))
        np.testing.assert_array_equal(state.running_mean, np.zeros(3))
        np.testing.assert_array_equal(state.running_var, np.ones(3))
        assert state.channels == 3

    @pytest.mark.parametrize("momentum", [0.0, -0.1, 1.5])
    def test_momentum_range(self, momentum):
        """Momentum must lie in (0, 1]."""
        with pytest.raises(PreconditionError):
            BNState.initial(2, momentum=momentum)

    def test_negative_running_variance(self):
        """Running variance cannot be negative."""
        with pytest.raises(PreconditionError):
            BNState(np.ones(2), np.zeros(2), np.zeros(2), np.array([1.0, -1.0]))

    def test_channel_dimension_mismatch(self):
        """All per-channel arrays share one length."""
        with pytest.raises(ShapeError):
            BNState(np.ones(2), np.zeros(3), np.zeros(2), np.ones(2))


class TestBatchNormForward:
    """Forward pass in both modes."""

    def test_training_normalizes_with_batch_statistics(self, rng):
        """Each channel of x_hat has zero mean and unit biased variance."""
        x = rng.normal(3.0, 2.0, (4, 3, 5, 5))

        y, cache, _ = batchnorm_forward(x, BNState.initial(3, epsilon=0.0))

        np.testing.assert_allclose(y.mean(axis=(0, 2, 3)), 0.0, atol=1e-12)
        np.testing.assert_allclose(y.var(axis=(0, 2, 3)), 1.0, atol=1e-12)
        assert cache.n == 4 * 5 * 5

    def test_training_updates_running_stats_with_unbiased_variance(self, rng):
        """running_var moves towards the n/(n-1) corrected batch variance."""
        x = rng.standard_normal((2, 2, 3, 3))
        state = BNState.initial(2, momentum=0.1)
        n = 2 * 3 * 3

        _, cache, updated = batchnorm_forward(x, state)

        unbiased = x.var(axis=(0, 2, 3), ddof=0) * n / (n - 1)
        np.testing.assert_allclose(updated.running_mean, 0.1 * x.mean(axis=(0, 2, 3)))
        np.testing.assert_allclose(updated.running_var, 0.9 + 0.1 * unbiased)
        np.testing.assert_allclose(cache.batch_var_biased, x.var(axis=(0, 2, 3)))

    def test_inference_uses_running_statistics(self, rng):
        """Inference mode never changes the state and ignores batch statistics."""
        x = rng.standard_normal((2, 2, 3, 3))
        state = BNState(np.array([2.0, 1.0]), np.array([0.5, 0.0]), np.array([1.0, -1.0]),
                        np.array([4.0, 0.25]), epsilon=0.0, mode=BNMode.INFERENCE)

        y, _, updated = batchnorm_forward(x, state)

        expected = (x - np.array([1.0, -1.0]).reshape(1, -1, 1, 1)) / np.array([2.0, 0.5]).reshape(1, -1, 1, 1)
        expected = expected * np.array([2.0, 1.0]).reshape(1, -1, 1, 1) + np.array([0.5, 0.0]).reshape(1, -1, 1, 1)
        np.testing.assert_allclose(y, expected)
        assert updated is state

    def test_training_needs_two_elements(self, rng):
        """A single element per channel has no batch variance."""
        with pytest.raises(PreconditionError):
            batchnorm_forward(rng.standard_normal((1, 2, 1, 1)), BNState.initial(2))

    def test_channel_mismatch(self, rng):
        """Input channels must match the layer."""
        with pytest.raises(ShapeError):
            batchnorm_forward(rng.standard_normal((2, 3, 2, 2)), BNState.initial(2))

    def test_running_update_needs_two_elements(self):
        """The unbiased correction is undefined for n < 2."""
        with pytest.raises(PreconditionError):
            update_running_stats(LayerStats(np.zeros(1), np.ones(1)), np.zeros(1), np.ones(1), 1, 0.1)


class TestBatchNormGradients:
    """The two input-gradient modes."""

    def test_inference_gradient_is_rescaling(self, rng):
        """dx = dx_hat / sigma per channel."""
        g = rng.standard_normal((2, 3, 2, 2))
        sigma = np.array([1.0, 2.0, 4.0])

        dx = bn_input_grad_inference(g, sigma)

        np.testing.assert_allclose(dx, g / sigma.reshape(1, -1, 1, 1))

    def test_inference_gradient_needs_positive_sigma(self, rng):
        """Zero sigma is refused."""
        with pytest.raises(PreconditionError):
            bn_input_grad_inference(rng.standard_normal((1, 2, 2, 2)), np.array([1.0, 0.0]))

    @pytest.mark.parametrize("shape", [(2, 3, 4, 4), (5, 1, 1, 1), (1, 2, 3, 2)])
    def test_training_gradient_projection(self, rng, shape):
        """Training-mode gradients sum to zero per channel and are orthogonal to x_hat."""
        x = rng.normal(1.0, 2.0, shape)
        _, cache, _ = batchnorm_forward(x, BNState.initial(shape[1], epsilon=0.0))

        dx = bn_input_grad_training(rng.standard_normal(shape), cache)

        np.testing.assert_allclose(dx.sum(axis=(0, 2, 3)), 0.0, atol=1e-9)
        np.testing.assert_allclose((dx * cache.normalized).sum(axis=(0, 2, 3)), 0.0, atol=1e-9)

    def test_training_gradient_shape_check(self, rng):
        """The upstream gradient must match the cached activation."""
        _, cache, _ = batchnorm_forward(rng.standard_normal((2, 2, 2, 2)), BNState.initial(2))

        with pytest.raises(ShapeError):
            bn_input_grad_training(rng.standard_normal((2, 2, 2, 3)), cache)

    def test_batch_statistics(self, rng):
        """Per-channel mean and biased variance."""
        x = rng.standard_normal((3, 2, 4, 4))

        mean, var = batch_statistics(x)

        np.testing.assert_allclose(mean, x.mean(axis=(0, 2, 3)))
        np.testing.assert_allclose(var, x.var(axis=(0, 2, 3)))


class TestBatchNormLayer:
    """batchnorm_layer and the normalize primitive inside a graph."""

    def _layer(self, mode):
        graph = Graph()
        x = graph.leaf("x", (2, 3, 3, 3))
        gamma = graph.leaf("gamma", (3,))
        beta = graph.leaf("beta", (3,))
        running = (graph.leaf("mean", (3,)), graph.leaf("var", (3,))) if mode == BNMode.INFERENCE else None
        y, trace = batchnorm_layer(x, gamma, beta, mode, 1e-5, "bn", running)
        return graph, x, gamma, beta, running, y, trace

    @pytest.mark.parametrize("mode", list(BNMode))
    def test_matches_numpy_forward(self, rng, mode):
        """Graph output equals batchnorm_forward for the same state."""
        graph, x, gamma, beta, running, y, _ = self._layer(mode)
        state = BNState(rng.uniform(0.5, 2.0, 3), rng.normal(size=3), rng.normal(size=3),
                        rng.uniform(0.5, 2.0, 3), mode=mode)
        x_value = rng.standard_normal((2, 3, 3, 3))
        bindings = {x: x_value, gamma: state.gamma, beta: state.beta}
        if running is not None:
            bindings[running[0]], bindings[running[1]] = state.running_mean, state.running_var

        value = graph.eval(bindings, [y])[0]

        np.testing.assert_allclose(value, batchnorm_forward(x_value, state)[0], rtol=1e-12, atol=1e-12)

    @pytest.mark.parametrize("mode", list(BNMode))
    def test_input_gradient_and_its_derivative(self, rng, mode):
        """First and second order input gradients agree with finite differences."""
        graph, x, gamma, beta, running, y, _ = self._layer(mode)
        weights = rng.standard_normal((2, 3, 3, 3))
        out = (y * weights).exp().sum()
        bindings = {gamma: rng.uniform(0.5, 1.5, 3), beta: rng.normal(size=3)}
        if running is not None:
            bindings[running[0]], bindings[running[1]] = rng.normal(size=3), rng.uniform(0.5, 2.0, 3)
        x_value = rng.standard_normal((2, 3, 3, 3))

        assert check_gradient(graph, out, x, x_value * 0.5, bindings=bindings) < 1e-6
        assert check_second_order(graph, out, x, x_value * 0.5, bindings=bindings) < 1e-5

    def test_trace_holds_batch_statistics(self, rng):
        """The trace exposes the batch mean and biased variance in either mode."""
        graph, x, gamma, beta, running, _, trace = self._layer(BNMode.INFERENCE)
        x_value = rng.standard_normal((2, 3, 3, 3))

        mean, var = graph.eval({x: x_value}, [trace.mean, trace.var])

        np.testing.assert_allclose(mean, x_value.mean(axis=(0, 2, 3)))
        np.testing.assert_allclose(var, x_value.var(axis=(0, 2, 3)))
        assert trace.n == 18

    def test_inference_needs_running_statistics(self):
        """Inference mode without running leaves is refused."""
        graph = Graph()
        x = graph.leaf("x", (2, 1, 2, 2))

        with pytest.raises(PreconditionError):
            batchnorm_layer(x, graph.leaf("g", (1,)), graph.leaf("b", (1,)), BNMode.INFERENCE, 1e-5, "bn")
