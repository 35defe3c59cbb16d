"""Plain SGD steps used to move a model away from initialization."""
from typing import Dict, Sequence

from gia_lab.core.exceptions import PreconditionError
from gia_lab.core.models import Batch, BNMode, LayerStats
from gia_lab.nn.batchnorm import update_running_stats
from gia_lab.nn.gradients import build_gradient_program
from gia_lab.nn.model import Model, ModelParams
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)


def advance_running_stats(model: Model, params: ModelParams,
                          batch_stats: Dict[str, LayerStats], n_per_channel: Dict[str, int]) -> Dict[str, LayerStats]:
    """One momentum update of every BatchNorm layer."""
    momentum = model.config.momentum
    return {
        name: update_running_stats(params.running_stats[name], stats.mean, stats.var,
                                   n_per_channel[name], momentum)
        for name, stats in batch_stats.items()
    }


def sgd_pretrain(model: Model, params: ModelParams, batches: Sequence[Batch], steps: int,
                 learning_rate: float = 0.01) -> ModelParams:
    """
    Run ``steps`` training-mode SGD steps, cycling through ``batches``.

    Running statistics advance once per step, as they would in a client.
    """
    if steps < 0:
        raise PreconditionError(f"steps must be >= 0, got {steps}")
    if steps and not batches:
        raise PreconditionError("Pretraining needs at least one batch")
    params = params.copy()
    programs = {}
    for step in range(steps):
        batch = batches[step % len(batches)]
        program = programs.get(batch.size)
        if program is None:
            program = programs[batch.size] = build_gradient_program(model, batch.size, BNMode.TRAINING)
        loss, grads = program.evaluate(params, batch.images, batch.labels)
        stats = program.batch_stats(params, batch.images)
        n = {name: trace.n for name, trace in program.traces.items()}
        running = advance_running_stats(model, params, stats, n)
        tensors = {name: value - learning_rate * grads[name] for name, value in params.tensors.items()}
        params = ModelParams(tensors=tensors, running_stats=running)
        logger.debug(
            "Pretraining step",
            extra={'context': {'step': step, 'loss': loss, 'batch_size': batch.size}}
        )
    return params
