"""Experiment configuration domain model."""
from dataclasses import dataclass, field, fields
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from gia_lab.core.exceptions import ConfigError
from gia_lab.core.models.attack import StatSource
from gia_lab.core.models.dataset import DatasetSource
from gia_lab.core.models.federated import SharingPolicy
from gia_lab.core.models.model import BNMode
from gia_lab.core.models.search import SearchSpace


class SharingSetting(str, Enum):
    """The three information-sharing settings, in order of increasing difficulty for the attacker."""
    INFERENCE = "inference"
    STATS_SHARED = "stats_shared"
    NO_STATS = "no_stats"

    @property
    def policy(self) -> SharingPolicy:
        if self == SharingSetting.INFERENCE:
            return SharingPolicy(mode=BNMode.INFERENCE, share_running_stats=True)
        return SharingPolicy(mode=BNMode.TRAINING,
                             share_running_stats=self == SharingSetting.STATS_SHARED)

    @property
    def stat_source(self) -> StatSource:
        return {
            SharingSetting.INFERENCE: StatSource.FIXED,
            SharingSetting.STATS_SHARED: StatSource.RECOVERED,
            SharingSetting.NO_STATS: StatSource.PROXY,
        }[self]


# Matrix column order
SETTINGS_ORDER = (SharingSetting.NO_STATS, SharingSetting.STATS_SHARED, SharingSetting.INFERENCE)


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything a CLI run needs to be replayed.

    Args:
        preset: Model preset name
        setting: Sharing setting of the client
        dataset: Image source
        batch_size: Client batch size B
        seed: Master seed
        out_dir: Output directory
        lambda_tv: Total variation weight for single attacks
        lambda_bn: BatchNorm regularizer weight for single attacks
        learning_rate: Adam step size for single attacks
        iterations: Attack iterations
        top_fraction: Compared gradient fraction, None for all weights
        smoothing: Median smoothing toggle
        stat_source: Overrides the setting's default statistic source
        restarts: Attack restarts
        boxed: Clamp candidates into the image range
        lr_decay: Step learning-rate decay
        aux_batches: Auxiliary batches for the proxy variant
        n_trials: Search trials per run or matrix cell
        prune: Median-stopping pruning in searches
        search_lambda_bn: Log-uniform search bounds of lambda_bn
        search_lambda_tv: Log-uniform search bounds of lambda_tv
        search_learning_rate: Log-uniform search bounds of the learning rate
        search_grad_compare: Compared-fraction choices of the search, none for all weights
        search_smoothing: Smoothing choices of the search
        batch_pool: Candidate batches a search picks from
        pretrain_steps: SGD steps applied to the model before the client step
        pretrain_lr: Learning rate of those steps
        sizes: Batch sizes of the sweep
        presets: Presets of the matrix
        jobs: Worker count
    """
    preset: str = 'postact_standard'
    setting: SharingSetting = SharingSetting.INFERENCE
    dataset: DatasetSource = field(default_factory=DatasetSource)
    batch_size: int = 4
    seed: int = 0
    out_dir: Path = Path('runs')
    lambda_tv: float = 1e-2
    lambda_bn: float = 1e-2
    learning_rate: float = 0.1
    iterations: int = 500
    top_fraction: Optional[float] = None
    smoothing: bool = False
    stat_source: Optional[StatSource] = None
    restarts: int = 1
    boxed: bool = True
    lr_decay: bool = False
    aux_batches: int = 5
    n_trials: int = 20
    prune: bool = False
    search_lambda_bn: Tuple[float, ...] = (1e-4, 1e1)
    search_lambda_tv: Tuple[float, ...] = (1e-6, 1e0)
    search_learning_rate: Tuple[float, ...] = (1e-3, 1e0)
    search_grad_compare: Tuple[Optional[float], ...] = (None, 0.5, 0.25)
    search_smoothing: Tuple[bool, ...] = (True, False)
    batch_pool: int = 5
    pretrain_steps: int = 0
    pretrain_lr: float = 0.01
    sizes: Tuple[int, ...] = (1, 2, 4, 8)
    presets: Tuple[str, ...] = ('preact_wide', 'postact_wide', 'postact_standard', 'deep_narrow_noskip')
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, 'setting', SharingSetting(self.setting))
        object.__setattr__(self, 'out_dir', Path(self.out_dir))
        if self.stat_source is not None:
            object.__setattr__(self, 'stat_source', StatSource(self.stat_source))
        object.__setattr__(self, 'sizes', tuple(int(s) for s in self.sizes))
        object.__setattr__(self, 'presets', tuple(self.presets))
        for name in ('search_lambda_bn', 'search_lambda_tv', 'search_learning_rate', 'search_grad_compare',
                     'search_smoothing'):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    @classmethod
    def field_names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    @property
    def resolved_stat_source(self) -> StatSource:
        return self.stat_source if self.stat_source is not None else self.setting.stat_source

    def validate(self) -> 'ExperimentConfig':
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.n_trials < 1:
            raise ConfigError(f"n_trials must be >= 1, got {self.n_trials}")
        if self.aux_batches < 1:
            raise ConfigError(f"aux_batches must be >= 1, got {self.aux_batches}")
        if self.pretrain_steps < 0:
            raise ConfigError(f"pretrain_steps must be >= 0, got {self.pretrain_steps}")
        if not self.sizes or min(self.sizes) < 1:
            raise ConfigError(f"sizes must be positive, got {self.sizes}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        self.search_space()
        self.dataset.validate()
        return self

    def search_space(self) -> SearchSpace:
        """The random-search ranges described by the search_* keys and batch_pool."""
        for name in ('search_lambda_bn', 'search_lambda_tv', 'search_learning_rate'):
            if len(getattr(self, name)) != 2:
                raise ConfigError(f"{name} needs exactly two bounds, got {getattr(self, name)}")
        return SearchSpace(
            lambda_bn=self.search_lambda_bn,
            lambda_tv=self.search_lambda_tv,
            learning_rate=self.search_learning_rate,
            grad_compare=self.search_grad_compare,
            smoothing=self.search_smoothing,
            batch_pool=self.batch_pool,
        ).validate()

    def to_dict(self) -> Dict[str, Any]:
        """JSON-friendly echo embedded in every artifact."""
        data: Dict[str, Any] = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Enum):
                value = value.value
            elif isinstance(value, Path):
                value = str(value)
            elif isinstance(value, DatasetSource):
                value = value.to_dict()
            elif isinstance(value, tuple):
                value = list(value)
            data[f.name] = value
        return data
