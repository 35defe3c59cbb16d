"""Attack configuration and result domain models."""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from gia_lab.core.exceptions import ConfigError
from gia_lab.core.models.dataset import Normalization
from gia_lab.core.models.model import Batch, LayerStats


class StatSource(str, Enum):
    """Where the BatchNorm regularizer targets come from."""
    RECOVERED = "recovered"
    PROXY = "proxy"
    FIXED = "fixed"
    NONE = "none"


class CompareGranularity(str, Enum):
    """How gradient vectors are compared."""
    GLOBAL = "global"
    PER_LAYER = "per_layer"


class ProxySelection(str, Enum):
    """How the proxy attack picks among its candidate statistics."""
    DISCREPANCY = "discrepancy"
    # needs ground truth; for research comparisons only
    ORACLE_SSIM = "oracle_ssim"


def grad_compare_label(top_fraction: Optional[float]) -> str:
    return 'all_weights' if top_fraction is None else f'top_fraction({top_fraction:g})'


@dataclass(frozen=True)
class AttackConfig:
    """
    Settings of one gradient inversion attack.

    Args:
        lambda_tv: Total variation weight
        lambda_bn: BatchNorm statistic regularizer weight
        learning_rate: Adam step size
        iterations: Optimization steps per restart
        top_fraction: Compare only this fraction of largest gradient entries;
            None compares all weights
        smoothing: Apply a 3x3 median filter every ``smoothing_interval`` steps
        stat_source: Source of the regularizer targets
        init_seed: Seed of the standard normal initialization
        aux_batches: Auxiliary batches probed by the proxy variant
        boxed: Clamp the candidate into the valid image range after each step
        lr_decay: Multiply the learning rate by 0.1 at 3/8, 5/8 and 7/8 of the run
        restarts: Independent initializations; the lowest final discrepancy wins
        granularity: Global or per-layer cosine comparison
        proxy_selection: How proxy candidates are ranked
        normalization: Dataset normalization, giving the valid image range
        log_every: Debug log cadence in iterations
        smoothing_interval: Iterations between median filter passes
    """
    lambda_tv: float = 1e-2
    lambda_bn: float = 1e-2
    learning_rate: float = 0.1
    iterations: int = 2000
    top_fraction: Optional[float] = None
    smoothing: bool = False
    stat_source: StatSource = StatSource.NONE
    init_seed: int = 0
    aux_batches: Tuple[Batch, ...] = field(default=(), repr=False)
    boxed: bool = True
    lr_decay: bool = False
    restarts: int = 1
    granularity: CompareGranularity = CompareGranularity.GLOBAL
    proxy_selection: ProxySelection = ProxySelection.DISCREPANCY
    normalization: Optional[Normalization] = None
    log_every: int = 100
    smoothing_interval: int = 500

    def __post_init__(self):
        object.__setattr__(self, 'stat_source', StatSource(self.stat_source))
        object.__setattr__(self, 'granularity', CompareGranularity(self.granularity))
        object.__setattr__(self, 'proxy_selection', ProxySelection(self.proxy_selection))
        object.__setattr__(self, 'aux_batches', tuple(self.aux_batches))

    def validate(self) -> 'AttackConfig':
        if self.lambda_tv < 0 or self.lambda_bn < 0:
            raise ConfigError("Regularizer weights must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.top_fraction is not None and not 0.0 < self.top_fraction <= 1.0:
            raise ConfigError(f"top_fraction must be in (0, 1], got {self.top_fraction}")
        if self.restarts < 1:
            raise ConfigError(f"restarts must be >= 1, got {self.restarts}")
        if self.smoothing_interval < 1 or self.log_every < 1:
            raise ConfigError("smoothing_interval and log_every must be >= 1")
        if self.stat_source == StatSource.PROXY and not self.aux_batches:
            raise ConfigError("The proxy statistic source needs auxiliary batches")
        return self

    @property
    def grad_compare(self) -> str:
        return grad_compare_label(self.top_fraction)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly echo of the configuration."""
        return {
            'lambda_tv': self.lambda_tv,
            'lambda_bn': self.lambda_bn,
            'learning_rate': self.learning_rate,
            'iterations': self.iterations,
            'grad_compare': self.grad_compare,
            'top_fraction': self.top_fraction,
            'smoothing': self.smoothing,
            'stat_source': self.stat_source.value,
            'init_seed': self.init_seed,
            'aux_batches': len(self.aux_batches),
            'boxed': self.boxed,
            'lr_decay': self.lr_decay,
            'restarts': self.restarts,
            'granularity': self.granularity.value,
            'proxy_selection': self.proxy_selection.value,
            'normalization': self.normalization.to_dict() if self.normalization else None,
            'smoothing_interval': self.smoothing_interval,
        }


@dataclass(eq=False)
class AttackResult:
    """
    Outcome of one attack.

    Args:
        reconstruction: B x C x H x W candidate in normalized space
        final_discrepancy: Gradient discrepancy of the last iteration
        loss_trace: Total objective per iteration
        discrepancy_trace: Discrepancy term per iteration
        stats_used: Regularizer targets, when any
        init_seed: Seed of the winning initialization
        restart: Index of the winning restart
        proxy_candidate: Index of the winning proxy candidate
        oracle_selection: Whether ground truth picked the proxy candidate
        pruned: Whether the run was stopped early
        ssim_per_image: Filled in at evaluation time
    """
    reconstruction: np.ndarray
    final_discrepancy: float
    loss_trace: List[float]
    discrepancy_trace: List[float]
    stats_used: Optional[Dict[str, LayerStats]] = None
    init_seed: int = 0
    restart: int = 0
    proxy_candidate: Optional[int] = None
    oracle_selection: bool = False
    pruned: bool = False
    ssim_per_image: Optional[List[float]] = None

    @property
    def iterations_run(self) -> int:
        return len(self.loss_trace)

    def to_dict(self, trace_every: int = 10) -> Dict[str, Any]:
        return {
            'final_discrepancy': self.final_discrepancy,
            'iterations_run': self.iterations_run,
            'loss_trace': self.loss_trace[::trace_every],
            'discrepancy_trace': self.discrepancy_trace[::trace_every],
            'trace_every': trace_every,
            'init_seed': self.init_seed,
            'restart': self.restart,
            'proxy_candidate': self.proxy_candidate,
            'oracle_selection': self.oracle_selection,
            'pruned': self.pruned,
            'ssim_per_image': self.ssim_per_image,
            'stats_used': ({name: s.to_dict() for name, s in self.stats_used.items()}
                           if self.stats_used is not None else None),
        }
