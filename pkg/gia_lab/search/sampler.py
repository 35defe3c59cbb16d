"""Deterministic random-search sampler."""
import hashlib
import math
from typing import Any, Dict, Tuple

import numpy as np

from gia_lab.core.models import SearchSpace
from gia_lab.core.models.attack import grad_compare_label


def derive_seed(master_seed: int, *parts: Any) -> int:
    """Stable 63-bit seed for the purpose named by ``parts``."""
    key = ':'.join(str(p) for p in (master_seed,) + parts)
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return int.from_bytes(digest, 'little') >> 1


def trial_seed(master_seed: int, trial_index: int) -> int:
    """Seed of one trial, independent of execution order."""
    return derive_seed(master_seed, trial_index)


def log_uniform(rng: np.random.Generator, low: float, high: float) -> float:
    """exp(U(log low, log high)); degenerate bounds return ``low`` exactly."""
    u = rng.uniform(0.0, 1.0)
    if low == high:
        return float(low)
    log_low, log_high = math.log(low), math.log(high)
    return float(math.exp(log_low + u * (log_high - log_low)))


def sample_trial(space: SearchSpace, rng: np.random.Generator) -> Tuple[Dict[str, Any], int]:
    """
    Draw one trial's hyperparameters and batch.

    Fields are drawn in a fixed order, so the result depends only on the
    generator state.

    Returns:
        The sampled hyperparameters and the candidate batch id
    """
    lambda_bn = log_uniform(rng, *space.lambda_bn)
    lambda_tv = log_uniform(rng, *space.lambda_tv)
    learning_rate = log_uniform(rng, *space.learning_rate)
    top_fraction = space.grad_compare[int(rng.integers(len(space.grad_compare)))]
    smoothing = bool(space.smoothing[int(rng.integers(len(space.smoothing)))])
    batch_id = int(rng.integers(space.batch_pool))
    sampled = {
        'lambda_bn': lambda_bn,
        'lambda_tv': lambda_tv,
        'learning_rate': learning_rate,
        'grad_compare': grad_compare_label(top_fraction),
        'top_fraction': top_fraction,
        'smoothing': smoothing,
    }
    return sampled, batch_id
