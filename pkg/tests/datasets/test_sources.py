"""Tests for dataset readers."""
import numpy as np
import pytest

from gia_lab.core.exceptions import ConfigError, DatasetError
from gia_lab.core.models import DatasetKind, DatasetSource
from gia_lab.datasets import load_dataset, read_cifar_binary, read_image_dir, synthetic_shapes, write_ppm
from tests.factories import SyntheticSourceFactory


@pytest.fixture
def cifar_file(tmp_path):
    """Two CIFAR records with labels 7 and 2."""
    records = np.zeros((2, 3073), dtype=np.uint8)
    records[0, 0], records[1, 0] = 7, 2
    records[0, 1:1025] = 255  # first record: red plane saturated
    path = tmp_path / 'data_batch_1.bin'
    records.tofile(path)
    return path


@pytest.fixture
def image_dir(tmp_path):
    """Three small images and a labels file with a comment and a blank line."""
    root = tmp_path / 'images'
    for index, value in enumerate((0.0, 0.5, 1.0)):
        write_ppm(np.full((3, 4, 4), value), root / f'img{index}.ppm')
    (root / 'labels.txt').write_text("# name label\nimg0.ppm 0\n\nimg1.ppm 2  # grey\nimg2.ppm 1\n")
    return root


class TestSyntheticShapes:
    """The built-in synthetic dataset."""

    def test_seeded(self):
        """The same seed gives the same images."""
        first, labels = synthetic_shapes(5, 8, seed=3)
        second, _ = synthetic_shapes(5, 8, seed=3)

        np.testing.assert_array_equal(first, second)
        assert first.shape == (5, 3, 8, 8)
        assert set(labels) <= {0, 1, 2}

    def test_pixels_in_range(self):
        """Pixels lie in [0, 1]."""
        pixels, _ = synthetic_shapes(6, 12, seed=0)

        assert pixels.min() >= 0.0 and pixels.max() <= 1.0


class TestCifarBinary:
    """The CIFAR-10 binary record format."""

    def test_reads_records(self, cifar_file):
        """Labels lead each record and pixels are channel-planar."""
        pixels, labels = read_cifar_binary(cifar_file)

        assert labels.tolist() == [7, 2]
        assert pixels.shape == (2, 3, 32, 32)
        assert pixels[0, 0].min() == 1.0 and pixels[0, 1].max() == 0.0

    def test_partial_record(self, tmp_path):
        """A size that is not a whole number of records is refused."""
        path = tmp_path / 'bad.bin'
        path.write_bytes(b'\x00' * 3074)

        with pytest.raises(DatasetError):
            read_cifar_binary(path)

    def test_missing_file(self, tmp_path):
        """Unreadable files are dataset errors."""
        with pytest.raises(DatasetError):
            read_cifar_binary(tmp_path / 'absent.bin')


class TestImageDir:
    """Directories of images with a labels file."""

    def test_reads_listed_images(self, image_dir):
        """Comments and blank lines are skipped, images are resized."""
        pixels, labels = read_image_dir(image_dir, image_dir / 'labels.txt', size=8)

        assert labels.tolist() == [0, 2, 1]
        assert pixels.shape == (3, 3, 8, 8)
        assert pixels[2].min() == 1.0

    def test_default_labels_file(self, image_dir):
        """labels.txt in the directory is used when none is given."""
        _, labels = read_image_dir(image_dir, None, size=4)

        assert len(labels) == 3

    def test_malformed_line(self, image_dir):
        """Lines without a label are reported with their number."""
        (image_dir / 'labels.txt').write_text("img0.ppm\n")

        with pytest.raises(DatasetError, match=":1:"):
            read_image_dir(image_dir, image_dir / 'labels.txt', size=4)

    def test_missing_image(self, image_dir):
        """A listed image that does not exist is a dataset error."""
        (image_dir / 'labels.txt').write_text("nothere.ppm 0\n")

        with pytest.raises(DatasetError):
            read_image_dir(image_dir, image_dir / 'labels.txt', size=4)

    def test_empty_listing(self, image_dir):
        """A labels file listing nothing is refused."""
        (image_dir / 'labels.txt').write_text("# nothing\n")

        with pytest.raises(DatasetError):
            read_image_dir(image_dir, image_dir / 'labels.txt', size=4)


class TestLoadDataset:
    """Loading sources into normalized datasets."""

    def test_synthetic(self):
        """Synthetic data has three classes and normalizes to zero mean."""
        dataset = load_dataset(SyntheticSourceFactory(), seed=1)

        batch = dataset.batch(range(len(dataset)))
        assert dataset.num_classes == 3
        assert len(dataset) == 12
        np.testing.assert_allclose(batch.images.mean(axis=(0, 2, 3)), 0.0, atol=1e-10)

    def test_cifar_has_ten_classes(self, cifar_file):
        """The CIFAR reader always declares ten classes."""
        dataset = load_dataset(DatasetSource(kind=DatasetKind.CIFAR_BINARY, path=cifar_file))

        assert dataset.num_classes == 10

    def test_image_dir_classes_from_labels(self, image_dir):
        """The class count is one past the largest label."""
        dataset = load_dataset(DatasetSource(kind='image_dir', path=image_dir, image_size=4))

        assert dataset.num_classes == 3

    def test_path_required(self):
        """File-backed sources need a path."""
        with pytest.raises(ConfigError):
            load_dataset(DatasetSource(kind='cifar_binary'))

    def test_sampling(self, rng):
        """Sampled indices are sorted, distinct and bounded by the dataset."""
        dataset = load_dataset(SyntheticSourceFactory(), seed=1)

        indices = dataset.sample_indices(5, rng)
        batches = dataset.sample_batches(2, 3, rng)

        assert list(indices) == sorted(set(indices))
        assert [b.size for b in batches] == [3, 3]
        with pytest.raises(DatasetError):
            dataset.sample_indices(13, rng)
