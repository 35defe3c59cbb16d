"""Tests for loss and parameter-gradient extraction."""
import numpy as np
import pytest

from gia_lab.autodiff import Graph, check_gradient
from gia_lab.core.exceptions import ShapeError
from gia_lab.core.models import Batch, BNMode
from gia_lab.nn import build_gradient_program, cross_entropy, loss_and_gradients, one_hot, sgd_pretrain
from gia_lab.nn.batchnorm import BNState, batchnorm_forward


class TestLoss:
    """Cross-entropy and label encoding."""

    def test_one_hot(self):
        """Labels map to unit rows."""
        np.testing.assert_array_equal(one_hot([2, 0], 3), [[0, 0, 1], [1, 0, 0]])

    def test_one_hot_range(self):
        """Labels outside the class range are refused."""
        with pytest.raises(ShapeError):
            one_hot([3], 3)

    def test_cross_entropy_matches_numpy(self, rng):
        """Mean negative log-softmax of the true class."""
        logits = rng.standard_normal((3, 4)) * 5.0
        labels = [0, 3, 1]
        graph = Graph()
        z = graph.leaf('z', (3, 4))

        value = graph.eval({z: logits}, [cross_entropy(z, labels)])[0]

        shifted = logits - logits.max(axis=1, keepdims=True)
        log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        assert float(value) == pytest.approx(-log_probs[np.arange(3), labels].mean(), rel=1e-12)


class TestGradientProgram:
    """The differentiable loss-gradient program."""

    @pytest.mark.parametrize("mode", list(BNMode))
    def test_parameter_gradients_match_finite_differences(self, tiny_model, tiny_batch, mode):
        """Every parameter gradient agrees with central differences."""
        model, params = tiny_model
        program = build_gradient_program(model, 2, mode)
        bindings = program.bindings(params, tiny_batch.images, tiny_batch.labels)

        for name in ('stem.conv.weight', 'blocks.0.bn1.gamma', 'fc.bias'):
            error = check_gradient(program.graph, program.loss, program.parameters[name], params[name],
                                   bindings=bindings)
            assert error < 1e-6, name

    def test_loss_and_gradients_cover_every_parameter(self, tiny_model, tiny_batch):
        """One gradient per parameter, shaped like it."""
        model, params = tiny_model

        loss, grads = loss_and_gradients(model, params, tiny_batch, BNMode.TRAINING)

        assert loss > 0.0
        assert list(grads) == params.names
        for name, g in grads.items():
            assert g.shape == params[name].shape

    def test_batch_stats_match_stem_forward(self, tiny_model, tiny_batch):
        """The recorded stem statistics are those of the stem convolution output."""
        model, params = tiny_model
        program = build_gradient_program(model, 2, BNMode.TRAINING)
        graph = program.graph
        stem_out = [n for n in graph.nodes if n.op == 'conv2d'][0]

        stats = program.batch_stats(params, tiny_batch.images)
        conv = graph.eval(program.bindings(params, tiny_batch.images, tiny_batch.labels), [stem_out.id])[0]

        _, cache, _ = batchnorm_forward(conv, BNState.initial(4))
        np.testing.assert_allclose(stats['stem.bn'].mean, cache.batch_mean)
        np.testing.assert_allclose(stats['stem.bn'].var, cache.batch_var_biased)

    def test_wrong_batch_shape(self, tiny_model, rng):
        """Programs are built for one batch size."""
        model, params = tiny_model
        program = build_gradient_program(model, 2, BNMode.TRAINING)

        with pytest.raises(ShapeError):
            program.bindings(params, rng.standard_normal((3, 3, 8, 8)), [0, 1, 2])

    def test_label_range_is_checked(self, tiny_model, rng):
        """Labels beyond num_classes are refused before evaluation."""
        model, params = tiny_model

        with pytest.raises(ShapeError):
            loss_and_gradients(model, params, Batch(rng.standard_normal((2, 3, 8, 8)), (0, 9)), BNMode.TRAINING)


class TestPretraining:
    """SGD pretraining."""

    def test_steps_move_parameters_and_running_stats(self, tiny_model, tiny_batch):
        """Parameters and running statistics both advance."""
        model, params = tiny_model

        trained = sgd_pretrain(model, params, [tiny_batch], steps=2, learning_rate=0.05)

        assert not np.array_equal(trained['fc.weight'], params['fc.weight'])
        assert not np.array_equal(trained.running_stats['stem.bn'].mean, params.running_stats['stem.bn'].mean)

    def test_zero_steps_is_a_copy(self, tiny_model):
        """No steps leave values unchanged."""
        model, params = tiny_model

        trained = sgd_pretrain(model, params, [], steps=0)

        for name in params:
            np.testing.assert_array_equal(trained[name], params[name])

    def test_loss_decreases_on_one_batch(self, tiny_model, tiny_batch):
        """Repeated steps on one batch lower its training loss."""
        model, params = tiny_model
        before, _ = loss_and_gradients(model, params, tiny_batch, BNMode.TRAINING)

        trained = sgd_pretrain(model, params, [tiny_batch], steps=10, learning_rate=0.1)
        after, _ = loss_and_gradients(model, trained, tiny_batch, BNMode.TRAINING)

        assert after < before
