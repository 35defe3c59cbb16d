"""Dataset source and normalization domain models."""
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from gia_lab.core.exceptions import ConfigError, DatasetError


class DatasetKind(str, Enum):
    """Supported dataset sources."""
    SYNTHETIC = "synthetic"
    IMAGE_DIR = "image_dir"
    CIFAR_BINARY = "cifar_binary"


@dataclass(frozen=True)
class DatasetSource:
    """
    Where images come from.

    Args:
        kind: Source variant
        path: Directory (image_dir) or file (cifar_binary)
        labels_file: Labels file for image_dir, one "filename label" per line
        count: Number of synthetic images
        image_size: Side of synthetic images
    """
    kind: DatasetKind = DatasetKind.SYNTHETIC
    path: Optional[Path] = None
    labels_file: Optional[Path] = None
    count: int = 64
    image_size: int = 32

    def __post_init__(self):
        object.__setattr__(self, 'kind', DatasetKind(self.kind))
        if self.path is not None:
            object.__setattr__(self, 'path', Path(self.path))
        if self.labels_file is not None:
            object.__setattr__(self, 'labels_file', Path(self.labels_file))

    def validate(self) -> 'DatasetSource':
        if self.kind == DatasetKind.SYNTHETIC:
            if self.count < 1 or self.image_size < 8:
                raise ConfigError("Synthetic datasets need count >= 1 and image_size >= 8")
        elif self.path is None:
            raise ConfigError(f"Dataset '{self.kind.value}' needs a path")
        return self

    def to_dict(self) -> Dict[str, Any]:
        return {
            'kind': self.kind.value,
            'path': str(self.path) if self.path else None,
            'labels_file': str(self.labels_file) if self.labels_file else None,
            'count': self.count,
            'image_size': self.image_size,
        }


@dataclass(frozen=True)
class Normalization:
    """Per-channel affine normalization from [0, 1] pixel space."""
    mean: Tuple[float, ...]
    std: Tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, 'mean', tuple(float(m) for m in self.mean))
        object.__setattr__(self, 'std', tuple(float(s) for s in self.std))
        if len(self.mean) != len(self.std):
            raise DatasetError("Normalization mean and std differ in length")
        if any(s <= 0 for s in self.std):
            raise DatasetError("Normalization std must be positive")

    @classmethod
    def fit(cls, pixels: np.ndarray) -> 'Normalization':
        """Per-channel constants of an N x C x H x W array in [0, 1]."""
        mean = pixels.mean(axis=(0, 2, 3))
        std = pixels.std(axis=(0, 2, 3))
        return cls(tuple(mean), tuple(np.where(std > 1e-8, std, 1.0)))

    def _shaped(self, values: Tuple[float, ...], ndim: int) -> np.ndarray:
        # C x H x W images or B x C x H x W batches
        if ndim == 3:
            return np.asarray(values).reshape(-1, 1, 1)
        return np.asarray(values).reshape(1, -1, 1, 1)

    def normalize(self, pixels: np.ndarray) -> np.ndarray:
        return (pixels - self._shaped(self.mean, pixels.ndim)) / self._shaped(self.std, pixels.ndim)

    def denormalize(self, images: np.ndarray) -> np.ndarray:
        return images * self._shaped(self.std, images.ndim) + self._shaped(self.mean, images.ndim)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-channel (lower, upper) limits of normalized images, shaped 1 x C x 1 x 1."""
        mean = np.asarray(self.mean).reshape(1, -1, 1, 1)
        std = np.asarray(self.std).reshape(1, -1, 1, 1)
        return (0.0 - mean) / std, (1.0 - mean) / std

    def to_dict(self) -> Dict[str, Any]:
        return {'mean': list(self.mean), 'std': list(self.std)}
