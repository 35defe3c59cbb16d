"""One honest client's local step."""
from gia_lab.core.models import Batch, BNMode, ClientUpdate, SharingPolicy
from gia_lab.core.exceptions import PreconditionError
from gia_lab.nn.gradients import cached_gradient_program
from gia_lab.nn.model import Model, ModelParams
from gia_lab.nn.training import advance_running_stats
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)


def client_step(model: Model, params: ModelParams, batch: Batch, policy: SharingPolicy) -> ClientUpdate:
    """
    Compute the update a client sends after one step on ``batch``.

    Gradients depend only on the mode; sharing running statistics only adds
    the before/after snapshots. Training mode advances the running
    statistics once, inference mode leaves them at their current values.
    """
    if batch.size < 1:
        raise PreconditionError("Client batch is empty")
    batch.check_labels(model.config.num_classes)

    program = cached_gradient_program(model, batch.size, policy.mode)
    loss, gradients = program.evaluate(params, batch.images, batch.labels)
    n_per_channel = {name: trace.n for name, trace in program.traces.items()}

    before = dict(params.running_stats)
    if policy.mode == BNMode.TRAINING:
        after = advance_running_stats(model, params, program.batch_stats(params, batch.images), n_per_channel)
    else:
        after = before

    logger.info(
        "Client step",
        extra={
            'context': {
                'mode': policy.mode.value,
                'share_running_stats': policy.share_running_stats,
                'batch_size': batch.size,
                'loss': loss
            }
        }
    )
    return ClientUpdate(
        gradients=gradients,
        labels=batch.labels,
        batch_size=batch.size,
        momentum=model.config.momentum,
        n_per_channel=n_per_channel,
        mode=policy.mode,
        stats_before=before if policy.share_running_stats else None,
        stats_after=after if policy.share_running_stats else None,
    )
