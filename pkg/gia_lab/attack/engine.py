"""Gradient inversion by second-order optimization of a gradient-matching objective."""
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from gia_lab.autodiff import Graph, Var, gradients
from gia_lab.core.exceptions import (AttackDivergedError, ConfigError, InconsistentStatSourceError,
                                     NonFiniteError, ShapeError)
from gia_lab.core.models import (AttackConfig, AttackResult, Batch, BNMode, ClientUpdate, CompareGranularity,
                                 LayerStats, Normalization, ProxySelection, StatSource)
from gia_lab.attack.optimizer import Adam, decayed_learning_rate
from gia_lab.attack.regularizers import cosine_discrepancy, median_smooth, r_bn, top_change_mask, total_variation
from gia_lab.attack.statistics import probe_proxy_stats, recover_update_stats
from gia_lab.metrics import score_reconstruction
from gia_lab.nn.gradients import GradientProgram, build_gradient_program
from gia_lab.nn.model import Model, ModelParams
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

# progress(iteration, discrepancy) -> False stops the run early
ProgressCallback = Callable[[int, float], bool]


@dataclass(eq=False)
class AttackObjective:
    """The attack loss and its input gradient, built once per (model, update, config)."""
    program: GradientProgram
    total: Var
    discrepancy: Var
    input_grad: Var
    target_leaves: Dict[str, tuple]

    @property
    def graph(self) -> Graph:
        return self.program.graph


def build_objective(model: Model, update: ClientUpdate, config: AttackConfig, use_bn: bool) -> AttackObjective:
    """
    L(x) = discrepancy(grad_theta loss(x, y), g*) + lambda_tv * TV(x) + lambda_bn * R_BN(stats(x), targets).

    The candidate runs in the client's BatchNorm mode. Regularizer targets are
    leaves, so one objective serves every candidate target set.
    """
    program = build_gradient_program(model, update.batch_size, update.mode)
    graph = program.graph
    names = list(program.gradients)
    if set(update.gradients) != set(names):
        raise ShapeError(f"Update gradients do not match the model: "
                         f"{sorted(set(update.gradients) ^ set(names))}")
    g_star = {name: update.gradients[name] for name in names}
    mask = top_change_mask(g_star, config.top_fraction, order=names) if config.top_fraction is not None else None
    per_layer = config.granularity == CompareGranularity.PER_LAYER
    discrepancy = cosine_discrepancy(program.gradients, g_star, mask, per_layer=per_layer)

    total = discrepancy
    if config.lambda_tv > 0:
        total = total + total_variation(program.images) * config.lambda_tv

    target_leaves: Dict[str, tuple] = {}
    if use_bn:
        candidate = {name: (trace.mean, trace.var) for name, trace in program.traces.items()}
        targets = {}
        for name, channels in model.bn_layers.items():
            mean_leaf = graph.leaf(f'target.{name}.mean', (channels,))
            var_leaf = graph.leaf(f'target.{name}.var', (channels,))
            target_leaves[name] = (mean_leaf, var_leaf)
            targets[name] = _LeafStats(mean_leaf, var_leaf)
        total = total + r_bn(candidate, targets) * config.lambda_bn

    (input_grad,) = gradients(total, [program.images])
    return AttackObjective(program, total, discrepancy, input_grad, target_leaves)


class _LeafStats:
    """LayerStats look-alike whose mean and var are graph leaves."""

    def __init__(self, mean: Var, var: Var):
        self.mean = mean
        self.var = var


def _initial_candidate(shape, seed: int, restart: int) -> np.ndarray:
    rng = np.random.default_rng(seed if restart == 0 else [seed, restart])
    return rng.standard_normal(shape)


def image_bounds(normalization: Optional[Normalization]) -> Tuple[np.ndarray, np.ndarray]:
    """Valid range of candidate images; without a normalization images live in [0, 1] directly."""
    if normalization is None:
        return np.zeros(1), np.ones(1)
    return normalization.bounds()


def _optimize(objective: AttackObjective, params: ModelParams, update: ClientUpdate, config: AttackConfig,
              targets: Optional[Dict[str, LayerStats]], restart: int,
              progress: Optional[ProgressCallback]) -> AttackResult:
    program = objective.program
    bindings = program.bindings(params, np.zeros(program.images.shape), update.labels)
    for name, (mean_leaf, var_leaf) in objective.target_leaves.items():
        bindings[mean_leaf], bindings[var_leaf] = targets[name].mean, targets[name].var

    bounds = image_bounds(config.normalization)
    x = _initial_candidate(program.images.shape, config.init_seed, restart)
    adam = Adam(config.learning_rate)
    loss_trace: List[float] = []
    discrepancy_trace: List[float] = []
    pruned = False

    for iteration in range(config.iterations):
        if config.lr_decay:
            adam.learning_rate = decayed_learning_rate(config.learning_rate, iteration, config.iterations)
        bindings[program.images] = x
        try:
            total, discrepancy, grad = objective.graph.eval(
                bindings, [objective.total, objective.discrepancy, objective.input_grad])
        except NonFiniteError as e:
            logger.warning(
                "Attack diverged",
                extra={'context': {'iteration': iteration, 'node': e.node_id, 'op': e.op, 'restart': restart}}
            )
            raise AttackDivergedError(f"Objective became non-finite at iteration {iteration}: {e}",
                                      iteration) from e
        loss_trace.append(float(total))
        discrepancy_trace.append(float(discrepancy))

        if iteration % config.log_every == 0:
            logger.debug(
                "Attack iteration",
                extra={'context': {'iteration': iteration, 'loss': float(total),
                                   'discrepancy': float(discrepancy), 'restart': restart}}
            )
        else:
            logger.trace("Attack iteration", {'iteration': iteration, 'loss': float(total)})
        if progress is not None and progress(iteration, float(discrepancy)) is False:
            pruned = True
            break

        x = adam.step(x, grad)
        if config.boxed:
            x = np.clip(x, bounds[0], bounds[1])
        if config.smoothing and iteration % config.smoothing_interval == 0:
            x = median_smooth(x)

    x = np.clip(x, bounds[0], bounds[1])
    return AttackResult(
        reconstruction=x,
        final_discrepancy=discrepancy_trace[-1],
        loss_trace=loss_trace,
        discrepancy_trace=discrepancy_trace,
        stats_used=targets,
        init_seed=config.init_seed,
        restart=restart,
        pruned=pruned,
    )


def _attack_with_targets(objective: AttackObjective, params: ModelParams, update: ClientUpdate,
                         config: AttackConfig, targets: Optional[Dict[str, LayerStats]],
                         progress: Optional[ProgressCallback]) -> AttackResult:
    best: Optional[AttackResult] = None
    for restart in range(config.restarts):
        result = _optimize(objective, params, update, config, targets, restart, progress)
        if best is None or result.final_discrepancy < best.final_discrepancy:
            best = result
        if result.pruned:
            break
    return best


def resolve_targets(update: ClientUpdate, model: Model, params: ModelParams,
                    config: AttackConfig) -> List[Optional[Dict[str, LayerStats]]]:
    """Candidate regularizer target sets for the configured statistic source."""
    source = config.stat_source
    if source == StatSource.RECOVERED:
        return [recover_update_stats(update)]
    if source == StatSource.FIXED:
        if update.mode != BNMode.INFERENCE:
            raise InconsistentStatSourceError("stat_source=fixed needs an inference-mode update; a training-mode "
                                              "forward pass uses batch statistics, not running statistics")
        stats = update.stats_before if update.stats_before is not None else params.running_stats
        return [dict(stats)]
    if source == StatSource.PROXY:
        return list(probe_proxy_stats(model, params, config.aux_batches))
    return [None]


def run_attack(update: ClientUpdate, model: Model, params: ModelParams, config: AttackConfig,
               progress: Optional[ProgressCallback] = None, truth: Optional[Batch] = None) -> AttackResult:
    """
    Reconstruct the client batch behind ``update``.

    Args:
        update: Observed client update; its labels are assumed known
        model: Model template
        params: Parameters the client used
        config: Attack settings
        progress: Optional per-iteration hook; returning False stops early
        truth: Ground truth, required only for oracle-SSIM proxy selection

    Returns:
        The best result over restarts and, for the proxy source, over candidates
    """
    config.validate()
    if len(update.labels) != update.batch_size:
        raise ShapeError(f"Update has {len(update.labels)} labels for batch size {update.batch_size}")
    if config.stat_source == StatSource.RECOVERED and not update.shares_running_stats:
        raise InconsistentStatSourceError("stat_source=recovered needs an update with running-statistic snapshots")
    oracle = config.stat_source == StatSource.PROXY and config.proxy_selection == ProxySelection.ORACLE_SSIM
    if oracle and truth is None:
        raise ConfigError("Oracle-SSIM proxy selection needs the ground-truth batch")

    candidates = resolve_targets(update, model, params, config)
    use_bn = candidates[0] is not None and config.lambda_bn > 0
    if not use_bn:
        # without the regularizer every candidate gives the same run
        candidates = [None]
    objective = build_objective(model, update, config, use_bn)

    best: Optional[AttackResult] = None
    best_score = None
    for index, targets in enumerate(candidates):
        result = _attack_with_targets(objective, params, update, config, targets, progress)
        if config.stat_source == StatSource.PROXY:
            result.proxy_candidate = index
        if oracle:
            score = score_reconstruction(result.reconstruction, truth.images, config.normalization)[0]
            better = best_score is None or score > best_score
        else:
            score = result.final_discrepancy
            better = best_score is None or score < best_score
        if better:
            best, best_score = result, score
        if result.pruned:
            break

    best.oracle_selection = oracle
    logger.info(
        "Attack finished",
        extra={
            'context': {
                'stat_source': config.stat_source.value,
                'final_discrepancy': best.final_discrepancy,
                'iterations': best.iterations_run,
                'candidates': len(candidates),
                'pruned': best.pruned
            }
        }
    )
    return best
