"""Tests for the attack objective terms."""
import numpy as np
import pytest

from gia_lab.attack import cosine_discrepancy, median_smooth, r_bn, top_change_mask, total_variation
from gia_lab.autodiff import Graph, check_gradient
from gia_lab.core.exceptions import PreconditionError, ShapeError
from gia_lab.core.models import LayerStats
from tests.factories import layer_stats


class TestTotalVariation:
    """Isotropic total variation."""

    def test_constant_image_is_zero(self, rng):
        """Flat images score exactly zero."""
        assert abs(total_variation(np.full((2, 3, 6, 6), rng.normal()))) < 1e-6

    def test_single_edge(self):
        """A unit step contributes one per interior pixel along it."""
        x = np.zeros((1, 1, 3, 3))
        x[..., :, 2] = 1.0

        # the interior region is i, j < 2; only j == 1 sees the step to its right
        assert total_variation(x) == pytest.approx(2.0, abs=1e-5)

    def test_needs_two_rows_and_columns(self):
        """H and W below 2 have no differences."""
        with pytest.raises(ShapeError):
            total_variation(np.zeros((1, 1, 1, 4)))

    def test_graph_and_numpy_agree(self, rng):
        """The Var form evaluates to the numpy value and has a finite gradient."""
        x = rng.standard_normal((1, 2, 4, 4))
        graph = Graph()
        leaf = graph.leaf('x', x.shape)
        tv = total_variation(leaf)

        assert float(graph.eval({leaf: x}, [tv])[0]) == pytest.approx(total_variation(x), rel=1e-12)
        assert check_gradient(graph, tv, leaf, x) < 1e-6


class TestRBN:
    """The BatchNorm statistic regularizer."""

    def test_zero_at_target(self):
        """Identical statistics give zero."""
        target = {'a': layer_stats(3, 1), 'b': layer_stats(2, 2)}
        candidate = {k: (v.mean, v.var) for k, v in target.items()}

        assert r_bn(candidate, target) == 0.0

    def test_sum_of_squared_distances(self):
        """Means and variances both count, summed over layers."""
        target = {'a': LayerStats(np.zeros(2), np.ones(2))}
        candidate = {'a': (np.array([1.0, 0.0]), np.array([1.0, 3.0]))}

        assert r_bn(candidate, target) == pytest.approx(1.0 + 4.0)

    def test_layer_sets_must_match(self):
        """A missing layer is a precondition failure."""
        with pytest.raises(PreconditionError):
            r_bn({'a': (np.zeros(1), np.ones(1))}, {'b': LayerStats(np.zeros(1), np.ones(1))})


class TestCosineDiscrepancy:
    """1 - cosine similarity of gradient sets."""

    def test_zero_for_parallel_gradients(self, rng):
        """Positive rescaling does not change the cosine."""
        g = {'w': rng.standard_normal((3, 3)), 'b': rng.standard_normal(3)}
        scaled = {k: 2.5 * v for k, v in g.items()}

        assert abs(cosine_discrepancy(scaled, g)) < 1e-12

    def test_two_for_opposite_gradients(self, rng):
        """Negation gives the maximum of 2."""
        g = {'w': rng.standard_normal(4)}

        assert cosine_discrepancy({'w': -g['w']}, g) == pytest.approx(2.0)

    def test_mask_limits_the_comparison(self):
        """Masked-out entries do not count."""
        g_star = {'w': np.array([1.0, 0.0, 5.0])}
        g = {'w': np.array([1.0, 9.0, 5.0])}
        mask = {'w': np.array([True, False, True])}

        assert abs(cosine_discrepancy(g, g_star, mask)) < 1e-12

    def test_per_layer_averages(self):
        """Per-layer form averages one discrepancy per tensor."""
        g_star = {'a': np.array([1.0, 0.0]), 'b': np.array([0.0, 1.0])}
        g = {'a': np.array([1.0, 0.0]), 'b': np.array([0.0, -1.0])}

        assert cosine_discrepancy(g, g_star, per_layer=True) == pytest.approx(1.0)

    def test_zero_target(self):
        """The cosine is undefined for a zero target."""
        with pytest.raises(PreconditionError):
            cosine_discrepancy({'w': np.ones(2)}, {'w': np.zeros(2)})

    def test_names_and_shapes_must_match(self):
        """Gradient sets must describe the same tensors."""
        with pytest.raises(ShapeError):
            cosine_discrepancy({'w': np.ones(2)}, {'v': np.ones(2)})
        with pytest.raises(ShapeError):
            cosine_discrepancy({'w': np.ones(2)}, {'w': np.ones(3)})

    def test_graph_gradient(self, rng):
        """The Var form is differentiable w.r.t. the candidate gradient."""
        g_star = {'w': rng.standard_normal((2, 3))}
        graph = Graph()
        leaf = graph.leaf('w', (2, 3))
        out = cosine_discrepancy({'w': leaf}, g_star)

        assert check_gradient(graph, out, leaf, rng.standard_normal((2, 3))) < 1e-6


class TestTopChangeMask:
    """Selecting the largest gradient entries."""

    def test_selects_ceil_fraction_across_tensors(self):
        """ceil(f * N) entries are kept, ranked over all tensors together."""
        g = {'a': np.array([0.1, -5.0, 0.2]), 'b': np.array([[3.0, -0.05]])}

        masks = top_change_mask(g, 0.5)

        np.testing.assert_array_equal(masks['a'], [False, True, True])
        np.testing.assert_array_equal(masks['b'], [[True, False]])
        assert sum(int(m.sum()) for m in masks.values()) == 3

    def test_one_third_of_three_is_one(self):
        """Floating noise in f * N does not round up an extra entry."""
        masks = top_change_mask({'a': np.array([1.0, 2.0, 3.0])}, 1.0 / 3.0)

        np.testing.assert_array_equal(masks['a'], [False, False, True])

    def test_ties_go_to_earlier_entries(self):
        """Equal magnitudes are broken by tensor order and then flat index."""
        masks = top_change_mask({'a': np.array([1.0, 1.0]), 'b': np.array([1.0])}, 0.5, order=['b', 'a'])

        np.testing.assert_array_equal(masks['b'], [True])
        np.testing.assert_array_equal(masks['a'], [True, False])

    @pytest.mark.parametrize("fraction", [0.0, -0.1, 1.1])
    def test_fraction_range(self, fraction):
        """Fractions must lie in (0, 1]."""
        with pytest.raises(PreconditionError):
            top_change_mask({'a': np.ones(2)}, fraction)


class TestMedianSmooth:
    """3x3 median filtering."""

    def test_removes_isolated_spike(self):
        """A single outlier is replaced by its neighbourhood median."""
        x = np.zeros((1, 1, 5, 5))
        x[0, 0, 2, 2] = 10.0

        np.testing.assert_array_equal(median_smooth(x), np.zeros((1, 1, 5, 5)))

    def test_channels_are_independent(self):
        """Filtering never mixes channels or batch entries."""
        x = np.stack([np.full((2, 4, 4), v) for v in (1.0, 2.0)])

        out = median_smooth(x)

        np.testing.assert_array_equal(out, x)
        assert out.shape == x.shape
