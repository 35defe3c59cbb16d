"""Tests for PPM output and panels."""
import numpy as np
import pytest
from PIL import Image

from gia_lab.core.exceptions import ShapeError
from gia_lab.datasets import quantize, read_image, write_panel, write_ppm


class TestQuantize:
    """Float images to 8-bit RGB."""

    def test_rounds_and_clamps(self):
        """Values are clamped to [0, 1] and rounded to the nearest level."""
        pixels = np.array([-1.0, 0.5, 2.0]).reshape(3, 1, 1)

        assert quantize(pixels)[0, 0].tolist() == [0, 128, 255]

    def test_grey_is_replicated(self):
        """One-channel images become three identical channels."""
        out = quantize(np.full((1, 2, 2), 0.2))

        assert out.shape == (2, 2, 3)
        assert (out == 51).all()

    @pytest.mark.parametrize("shape", [(2, 4, 4), (4, 4), (3, 4, 4, 1)])
    def test_bad_shapes(self, shape):
        """Only 1- or 3-channel C x H x W input is accepted."""
        with pytest.raises(ShapeError):
            quantize(np.zeros(shape))


class TestPpmFiles:
    """Binary PPM and panels."""

    def test_ppm_header_and_values(self, tmp_path, rng):
        """Files are P6 with maxval 255 and read back to the quantized pixels."""
        pixels = rng.uniform(size=(3, 5, 7))

        path = write_ppm(pixels, tmp_path / 'nested' / 'img.ppm')

        assert path.read_bytes().startswith(b'P6')
        with Image.open(path) as image:
            assert image.size == (7, 5)
        np.testing.assert_array_equal(np.round(read_image(path) * 255.0).astype(np.uint8).transpose(1, 2, 0),
                                      quantize(pixels))

    def test_panel_layout(self, tmp_path):
        """Panels put the original left, a two-pixel white gap, then the reconstruction."""
        path = write_panel(np.zeros((3, 4, 4)), np.full((3, 4, 4), 0.5), tmp_path / 'panel.ppm')

        with Image.open(path) as image:
            data = np.asarray(image)
        assert data.shape == (4, 10, 3)
        assert (data[:, :4] == 0).all()
        assert (data[:, 4:6] == 255).all()
        assert (data[:, 6:] == 128).all()

    def test_panel_shapes_must_match(self, tmp_path):
        """Both halves must be the same size."""
        with pytest.raises(ShapeError):
            write_panel(np.zeros((3, 4, 4)), np.zeros((3, 5, 5)), tmp_path / 'panel.ppm')
