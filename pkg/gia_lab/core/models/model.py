"""Model family and batch domain models."""
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, Tuple

import numpy as np

from gia_lab.core.exceptions import ConfigError, ShapeError


class BlockStyle(str, Enum):
    """Where normalization sits relative to the convolutions of a residual block."""
    PRE_ACTIVATION = "pre_activation"
    POST_ACTIVATION = "post_activation"


class BNMode(str, Enum):
    """BatchNorm mode."""
    TRAINING = "training"
    INFERENCE = "inference"


@dataclass(frozen=True)
class ModelConfig:
    """
    Configuration of one member of the residual model family.

    Args:
        block_style: Pre- or post-activation blocks
        depth: Number of residual blocks
        width_multiplier: Channel multiplier applied to every block
        skip_connections: Whether blocks add a residual path
        input_shape: C x H x W of one image
        num_classes: Classifier output size
        base_channels: Channels of the stem and first stage at width 1
        momentum: BatchNorm running-statistic momentum
        epsilon: BatchNorm variance stabilizer
    """
    block_style: BlockStyle = BlockStyle.POST_ACTIVATION
    depth: int = 1
    width_multiplier: int = 1
    skip_connections: bool = True
    input_shape: Tuple[int, int, int] = (3, 32, 32)
    num_classes: int = 10
    base_channels: int = 16
    momentum: float = 0.1
    epsilon: float = 1e-5

    def __post_init__(self):
        object.__setattr__(self, 'block_style', BlockStyle(self.block_style))
        object.__setattr__(self, 'input_shape', tuple(int(s) for s in self.input_shape))

    def validate(self) -> 'ModelConfig':
        if self.depth < 1:
            raise ConfigError(f"depth must be >= 1, got {self.depth}")
        if self.width_multiplier < 1:
            raise ConfigError(f"width_multiplier must be >= 1, got {self.width_multiplier}")
        if len(self.input_shape) != 3 or min(self.input_shape) < 1:
            raise ConfigError(f"input_shape must be C x H x W, got {self.input_shape}")
        if self.num_classes < 1:
            raise ConfigError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.base_channels < 1:
            raise ConfigError(f"base_channels must be >= 1, got {self.base_channels}")
        if not 0.0 < self.momentum <= 1.0:
            raise ConfigError(f"momentum must be in (0, 1], got {self.momentum}")
        if self.epsilon < 0.0:
            raise ConfigError(f"epsilon must be >= 0, got {self.epsilon}")
        return self

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['block_style'] = self.block_style.value
        data['input_shape'] = list(self.input_shape)
        return data


@dataclass(frozen=True, eq=False)
class LayerStats:
    """Per-channel mean and variance of one BatchNorm layer."""
    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'mean', np.asarray(self.mean, dtype=np.float64))
        object.__setattr__(self, 'var', np.asarray(self.var, dtype=np.float64))
        if self.mean.shape != self.var.shape or self.mean.ndim != 1:
            raise ShapeError(f"Layer stats need matching 1-D mean and var, got "
                             f"{self.mean.shape} and {self.var.shape}")

    @property
    def channels(self) -> int:
        return self.mean.shape[0]

    def distance(self, other: 'LayerStats') -> float:
        """Squared L2 distance over both mean and variance."""
        return float(np.sum((self.mean - other.mean) ** 2) + np.sum((self.var - other.var) ** 2))

    def to_dict(self) -> Dict[str, Any]:
        return {'mean': self.mean.tolist(), 'var': self.var.tolist()}


@dataclass(eq=False)
class Batch:
    """
    Images in normalized space with their class labels.

    Args:
        images: B x C x H x W array
        labels: One class index per image
    """
    images: np.ndarray
    labels: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = tuple(int(y) for y in self.labels)
        if self.images.ndim != 4:
            raise ShapeError(f"Batch images must be B x C x H x W, got {self.images.shape}")
        if len(self.labels) != self.images.shape[0]:
            raise ShapeError(f"Batch has {self.images.shape[0]} images but {len(self.labels)} labels")

    @property
    def size(self) -> int:
        return self.images.shape[0]

    def check_labels(self, num_classes: int):
        for y in self.labels:
            if not 0 <= y < num_classes:
                raise ShapeError(f"Label {y} out of range for {num_classes} classes")
