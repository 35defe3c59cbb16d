"""Tests for reconstruction quality metrics."""
import numpy as np
import pytest

from gia_lab.core.exceptions import PreconditionError, ShapeError
from gia_lab.core.models import Normalization
from gia_lab.metrics import (SsimParams, best_assignment_ssim, mse, psnr, random_baseline_ssim,
                             score_reconstruction, ssim, ssim_batch, ssim_map, to_pixels)


@pytest.fixture
def pixels(rng):
    """Four smooth-ish 3 x 12 x 12 images in [0, 1]."""
    base = rng.uniform(0.0, 1.0, (4, 3, 12, 12))
    return (base + np.roll(base, 1, axis=-1) + np.roll(base, 1, axis=-2)) / 3.0


class TestSsim:
    """Gaussian-window SSIM."""

    def test_identical_images(self, pixels):
        """An image compared with itself scores 1."""
        assert ssim(pixels[0], pixels[0]) == pytest.approx(1.0)

    def test_symmetric(self, pixels):
        """SSIM does not depend on argument order."""
        assert ssim(pixels[0], pixels[1]) == pytest.approx(ssim(pixels[1], pixels[0]))

    def test_noise_scores_lower(self, pixels, rng):
        """Added noise lowers the score below 1."""
        noisy = np.clip(pixels[0] + rng.normal(0.0, 0.2, pixels[0].shape), 0.0, 1.0)

        assert ssim(pixels[0], noisy) < 0.9

    def test_map_uses_valid_windows(self, pixels):
        """A 7 x 7 window leaves H - 6 by W - 6 positions per channel."""
        assert ssim_map(pixels[0], pixels[1]).shape == (3, 6, 6)

    def test_grayscale_is_accepted(self, pixels):
        """Two-dimensional inputs are one-channel images."""
        assert ssim(pixels[0, 0], pixels[0, 0]) == pytest.approx(1.0)

    def test_small_images_are_refused(self):
        """Images smaller than the window have no valid position."""
        with pytest.raises(ShapeError):
            ssim(np.zeros((1, 5, 5)), np.zeros((1, 5, 5)))

    def test_batch_scores_in_given_order(self, pixels):
        """ssim_batch pairs images by position without reordering."""
        scores = ssim_batch(pixels[[0, 2]], pixels[[0, 1]])

        assert scores[0] == pytest.approx(1.0)
        assert scores[1] == pytest.approx(ssim(pixels[2], pixels[1]))
        with pytest.raises(ShapeError):
            ssim_batch(pixels[:1], pixels)

    def test_window_is_normalized(self):
        """The Gaussian weights sum to one and peak in the centre."""
        window = SsimParams().window()

        assert window.sum() == pytest.approx(1.0)
        assert np.unravel_index(window.argmax(), window.shape) == (3, 3)


class TestBestAssignment:
    """Matching reconstructions to true images."""

    def test_recovers_a_permutation(self, pixels):
        """A shuffled batch is matched back with perfect score."""
        order = [2, 0, 3, 1]

        mean, assignment = best_assignment_ssim(pixels[order], pixels)

        assert mean == pytest.approx(1.0)
        assert assignment == order

    def test_at_most_sixteen_images(self, rng):
        """Larger batches are refused."""
        batch = rng.uniform(size=(17, 1, 7, 7))

        with pytest.raises(PreconditionError):
            best_assignment_ssim(batch, batch)

    def test_shapes_must_match(self, pixels):
        """Batches of different size cannot be paired."""
        with pytest.raises(ShapeError):
            best_assignment_ssim(pixels[:2], pixels)

    def test_score_reconstruction_per_image(self, pixels):
        """Per-image scores follow the assignment."""
        normalization = Normalization((0.5, 0.5, 0.5), (0.2, 0.2, 0.2))
        normalized = normalization.normalize(pixels)

        mean, assignment, per_image = score_reconstruction(normalized[::-1], normalized, normalization)

        assert assignment == [3, 2, 1, 0]
        assert per_image == pytest.approx([1.0] * 4)
        assert mean == pytest.approx(1.0)


class TestPixelMetrics:
    """MSE, PSNR, baselines and pixel conversion."""

    def test_psnr_of_identical_images(self, pixels):
        """Zero error gives infinite PSNR."""
        assert psnr(pixels, pixels) == float('inf')

    def test_psnr_value(self):
        """A uniform error of 0.1 is 20 dB."""
        assert psnr(np.zeros(4), np.full(4, 0.1)) == pytest.approx(20.0)

    def test_mse_shapes(self):
        """Inputs must match in shape."""
        with pytest.raises(ShapeError):
            mse(np.zeros(2), np.zeros(3))

    def test_random_baseline_is_low_and_seeded(self, pixels):
        """Noise scores well below a true match, reproducibly."""
        first = random_baseline_ssim(pixels, count=3, seed=5)

        assert first < 0.5
        assert first == random_baseline_ssim(pixels, count=3, seed=5)

    def test_to_pixels_clamps(self):
        """Values outside [0, 1] are clamped after de-normalization."""
        normalization = Normalization((0.5,), (0.5,))

        px = to_pixels(np.array([[[[-3.0, 0.0, 3.0]]]]), normalization)

        np.testing.assert_array_equal(px, [[[[0.0, 0.5, 1.0]]]])
