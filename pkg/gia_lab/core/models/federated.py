"""Federated client update domain models."""
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from gia_lab.core.models.model import BNMode, LayerStats

StatsSnapshot = Dict[str, LayerStats]


@dataclass(frozen=True)
class SharingPolicy:
    """
    What a client runs and reveals.

    Inference mode never touches running statistics, so its snapshots are
    always the fixed initial ones.

    Args:
        mode: BatchNorm mode of the local step
        share_running_stats: Whether running-statistic snapshots are sent
    """
    mode: BNMode = BNMode.TRAINING
    share_running_stats: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'mode', BNMode(self.mode))


@dataclass(eq=False)
class ClientUpdate:
    """
    The observable a server receives from one client step.

    Args:
        gradients: Per-parameter gradients, named like ModelParams
        labels: True labels of the batch
        batch_size: B
        momentum: BatchNorm momentum used by the client
        n_per_channel: Elements per channel at each BatchNorm layer
        mode: BatchNorm mode of the step
        stats_before: Running statistics before the step, when shared
        stats_after: Running statistics after the step, when shared
    """
    gradients: Dict[str, np.ndarray]
    labels: Tuple[int, ...]
    batch_size: int
    momentum: float
    n_per_channel: Dict[str, int]
    mode: BNMode
    stats_before: Optional[StatsSnapshot] = field(default=None)
    stats_after: Optional[StatsSnapshot] = field(default=None)

    def __post_init__(self):
        self.mode = BNMode(self.mode)
        self.labels = tuple(int(y) for y in self.labels)

    @property
    def shares_running_stats(self) -> bool:
        return self.stats_before is not None and self.stats_after is not None
