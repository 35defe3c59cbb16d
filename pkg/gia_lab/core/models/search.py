"""Hyperparameter search domain models."""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

from gia_lab.core.exceptions import ConfigError


class TrialStatus(str, Enum):
    """Outcome of one search trial."""
    COMPLETED = "completed"
    DIVERGED = "diverged"
    PRUNED = "pruned"


@dataclass(frozen=True)
class SearchSpace:
    """
    Ranges sampled by the random search.

    Args:
        lambda_bn: Log-uniform bounds of the BatchNorm regularizer weight
        lambda_tv: Log-uniform bounds of the total variation weight
        learning_rate: Log-uniform bounds of the Adam step size
        grad_compare: Choices of compared fraction; None means all weights
        smoothing: Choices for the median smoothing toggle
        batch_pool: Number of candidate batches
    """
    lambda_bn: Tuple[float, float] = (1e-4, 1e1)
    lambda_tv: Tuple[float, float] = (1e-6, 1e0)
    learning_rate: Tuple[float, float] = (1e-3, 1e0)
    grad_compare: Tuple[Optional[float], ...] = (None, 0.5, 0.25)
    smoothing: Tuple[bool, ...] = (True, False)
    batch_pool: int = 5

    def validate(self) -> 'SearchSpace':
        for name in ('lambda_bn', 'lambda_tv', 'learning_rate'):
            low, high = getattr(self, name)
            if low <= 0 or high <= 0 or low > high:
                raise ConfigError(f"{name} bounds must be positive and ordered, got {(low, high)}")
        if not self.grad_compare or not self.smoothing:
            raise ConfigError("grad_compare and smoothing need at least one choice")
        if self.batch_pool < 1:
            raise ConfigError("batch_pool must be nonempty")
        return self


@dataclass
class TrialRecord:
    """
    One search trial.

    Wall time is excluded from equality so serial and parallel runs compare equal.

    Args:
        trial_index: Position in the search
        config: Sampled hyperparameters
        batch_id: Chosen candidate batch
        seed: Attack seed derived from the master seed
        ssim: Best-assignment SSIM, None unless completed
        final_discrepancy: Last gradient discrepancy, None if diverged
        status: Completed, diverged or pruned
        error: Diagnostic for diverged trials
        wall_time: Seconds spent
    """
    trial_index: int
    config: Dict[str, Any]
    batch_id: int
    seed: int
    ssim: Optional[float] = None
    final_discrepancy: Optional[float] = None
    status: 'TrialStatus' = TrialStatus.COMPLETED
    error: Optional[str] = None
    wall_time: float = field(default=0.0, compare=False)

    def __post_init__(self):
        self.status = TrialStatus(self.status)
        if self.ssim is not None and not -1.0 - 1e-9 <= self.ssim <= 1.0 + 1e-9:
            raise ValueError(f"SSIM out of range: {self.ssim}")

    @property
    def diverged(self) -> bool:
        return self.status == TrialStatus.DIVERGED

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        data = {
            'trial_index': self.trial_index,
            'config': self.config,
            'batch_id': self.batch_id,
            'seed': self.seed,
            'ssim': self.ssim,
            'final_discrepancy': self.final_discrepancy,
            'status': self.status.value,
            'error': self.error,
        }
        if include_timing:
            data['wall_time'] = self.wall_time
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrialRecord':
        return cls(
            trial_index=data['trial_index'],
            config=data['config'],
            batch_id=data['batch_id'],
            seed=data['seed'],
            ssim=data.get('ssim'),
            final_discrepancy=data.get('final_discrepancy'),
            status=TrialStatus(data.get('status', TrialStatus.COMPLETED.value)),
            error=data.get('error'),
            wall_time=data.get('wall_time', 0.0),
        )
