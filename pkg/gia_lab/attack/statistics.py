"""Recovering and probing BatchNorm batch statistics."""
from typing import Dict, List, Sequence

import numpy as np

from gia_lab.core.exceptions import (InconsistentStatisticsError, InconsistentStatSourceError,
                                     PreconditionError, ShapeError)
from gia_lab.core.models import Batch, BNMode, ClientUpdate, LayerStats
from gia_lab.nn.gradients import cached_gradient_program
from gia_lab.nn.model import Model, ModelParams


def recover_batch_stats(before: LayerStats, after: LayerStats, momentum: float, n: int) -> LayerStats:
    """
    Invert one momentum update of the running statistics.

    The running variance is stored unbiased, so the recovered batch variance
    is rescaled by (n-1)/n back to the biased convention of the forward pass.
    """
    if not 0.0 < momentum <= 1.0:
        raise PreconditionError(f"momentum must be in (0, 1], got {momentum}")
    if n < 2:
        raise PreconditionError(f"n must be >= 2, got {n}")
    if before.mean.shape != after.mean.shape:
        raise ShapeError(f"Snapshots have {before.channels} and {after.channels} channels")

    mean = (after.mean - (1.0 - momentum) * before.mean) / momentum
    # same product as the forward update, so consistent snapshots never give a negative difference
    var = (n - 1) / (n * momentum) * (after.var - (1.0 - momentum) * before.var)

    if np.any(var < 0.0):
        raise InconsistentStatisticsError(
            f"Recovered variance is negative ({float(var.min()):.3e}); the snapshots are not one "
            f"momentum step apart"
        )
    return LayerStats(mean, var)


def recover_update_stats(update: ClientUpdate) -> Dict[str, LayerStats]:
    """Recover every layer's batch statistics from a shared training-mode update."""
    if not update.shares_running_stats:
        raise InconsistentStatSourceError("Recovered statistics need running-statistic snapshots in the update")
    if update.mode != BNMode.TRAINING:
        raise InconsistentStatSourceError("Recovered statistics need a training-mode update")
    recovered = {}
    for layer, after in update.stats_after.items():
        if layer not in update.stats_before or layer not in update.n_per_channel:
            raise InconsistentStatSourceError(f"Update lacks snapshot data for layer '{layer}'")
        recovered[layer] = recover_batch_stats(update.stats_before[layer], after, update.momentum,
                                               update.n_per_channel[layer])
    return recovered


def probe_proxy_stats(model: Model, params: ModelParams, aux_batches: Sequence[Batch]) -> List[Dict[str, LayerStats]]:
    """Training-mode batch statistics of each auxiliary batch, in input order."""
    if not aux_batches:
        raise PreconditionError("Proxy probing needs at least one auxiliary batch")
    candidates = []
    for batch in aux_batches:
        if tuple(batch.images.shape[1:]) != model.config.input_shape:
            raise ShapeError(f"Auxiliary batch {batch.images.shape} does not match model input "
                             f"{model.config.input_shape}")
        program = cached_gradient_program(model, batch.size, BNMode.TRAINING)
        candidates.append(program.batch_stats(params, batch.images))
    return candidates
