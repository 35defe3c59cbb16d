"""Dataset readers and the normalized in-memory dataset."""
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np

from gia_lab.core.exceptions import DatasetError
from gia_lab.core.models import Batch, DatasetKind, DatasetSource, Normalization
from gia_lab.datasets.image_io import read_image
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

CIFAR_RECORD = 3073
CIFAR_SIDE = 32
SHAPE_CLASSES = ('rectangle', 'circle', 'triangle')


@dataclass(eq=False)
class Dataset:
    """
    Images in [0, 1] with labels and the normalization fitted to them.

    Args:
        pixels: N x C x H x W array in [0, 1]
        labels: Class index per image
        num_classes: Size of the label space
        normalization: Per-channel constants for the model input space
    """
    pixels: np.ndarray
    labels: np.ndarray
    num_classes: int
    normalization: Normalization

    def __len__(self) -> int:
        return self.pixels.shape[0]

    @property
    def image_shape(self) -> Tuple[int, int, int]:
        return tuple(self.pixels.shape[1:])

    def batch(self, indices: Sequence[int]) -> Batch:
        indices = np.asarray(indices, dtype=np.int64)
        return Batch(self.normalization.normalize(self.pixels[indices]),
                     [int(y) for y in self.labels[indices]])

    def sample_indices(self, size: int, rng: np.random.Generator) -> np.ndarray:
        if size > len(self):
            raise DatasetError(f"Batch size {size} exceeds the {len(self)} available images")
        return np.sort(rng.choice(len(self), size=size, replace=False))

    def sample_batches(self, count: int, size: int, rng: np.random.Generator) -> List[Batch]:
        return [self.batch(self.sample_indices(size, rng)) for _ in range(count)]


def synthetic_shapes(count: int, size: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Filled rectangles, circles or triangles on noisy backgrounds; the class is the shape."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    images = np.empty((count, 3, size, size))
    labels = np.empty(count, dtype=np.int64)
    for i in range(count):
        label = int(rng.integers(len(SHAPE_CLASSES)))
        background = rng.uniform(0.0, 0.5, 3)
        image = background[:, None, None] + rng.normal(0.0, 0.05, (3, size, size))
        color = rng.uniform(0.4, 1.0, 3)
        cx, cy = rng.uniform(0.35 * size, 0.65 * size, 2)
        radius = rng.uniform(0.18 * size, 0.3 * size)
        if label == 0:
            aspect = rng.uniform(0.6, 1.0)
            mask = (np.abs(xx - cx) <= radius) & (np.abs(yy - cy) <= radius * aspect)
        elif label == 1:
            mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius ** 2
        else:
            top = cy - radius
            mask = (yy >= top) & (yy <= cy + radius) & (np.abs(xx - cx) <= (yy - top) / 2.0)
        image[:, mask] = color[:, None]
        images[i] = np.clip(image, 0.0, 1.0)
        labels[i] = label
    return images, labels


def read_cifar_binary(path: Path) -> Tuple[np.ndarray, np.ndarray]:
    """Records of one label byte followed by 3 x 32 x 32 channel-planar pixel bytes."""
    try:
        data = np.fromfile(path, dtype=np.uint8)
    except OSError as e:
        raise DatasetError(f"Cannot read CIFAR file {path}: {e}") from e
    if data.size == 0 or data.size % CIFAR_RECORD:
        raise DatasetError(f"CIFAR file size {data.size} is not a multiple of {CIFAR_RECORD} bytes")
    records = data.reshape(-1, CIFAR_RECORD)
    labels = records[:, 0].astype(np.int64)
    pixels = records[:, 1:].reshape(-1, 3, CIFAR_SIDE, CIFAR_SIDE).astype(np.float64) / 255.0
    return pixels, labels


def read_image_dir(path: Path, labels_file: Path, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """Images listed in ``labels_file`` as 'filename label' lines, resized to size x size."""
    if labels_file is None:
        labels_file = path / 'labels.txt'
    try:
        lines = Path(labels_file).read_text().splitlines()
    except OSError as e:
        raise DatasetError(f"Cannot read labels file {labels_file}: {e}") from e
    images, labels = [], []
    for number, line in enumerate(lines, start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        try:
            name, label = line.rsplit(maxsplit=1)
            labels.append(int(label))
        except ValueError:
            raise DatasetError(f"{labels_file}:{number}: expected 'filename label'") from None
        try:
            images.append(read_image(path / name, size))
        except OSError as e:
            raise DatasetError(f"Cannot read image {path / name}: {e}") from e
    if not images:
        raise DatasetError(f"No images listed in {labels_file}")
    return np.stack(images), np.asarray(labels, dtype=np.int64)


def load_dataset(source: DatasetSource, seed: int = 0) -> Dataset:
    """Load a source and fit its per-channel normalization."""
    source.validate()
    if source.kind == DatasetKind.SYNTHETIC:
        pixels, labels = synthetic_shapes(source.count, source.image_size, seed)
        num_classes = len(SHAPE_CLASSES)
    elif source.kind == DatasetKind.CIFAR_BINARY:
        pixels, labels = read_cifar_binary(source.path)
        num_classes = 10
    else:
        pixels, labels = read_image_dir(source.path, source.labels_file, source.image_size)
        num_classes = int(labels.max()) + 1
    if labels.min() < 0:
        raise DatasetError("Labels must be non-negative")

    dataset = Dataset(pixels=pixels, labels=labels, num_classes=num_classes,
                      normalization=Normalization.fit(pixels))
    logger.info(
        "Loaded dataset",
        extra={'context': {'kind': source.kind.value, 'images': len(dataset), 'shape': dataset.image_shape}}
    )
    return dataset
