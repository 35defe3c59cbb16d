"""Numerical self-checks run on a tiny model."""
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Tuple

import numpy as np

from gia_lab.attack import build_objective, cosine_discrepancy, r_bn, recover_update_stats, total_variation
from gia_lab.autodiff import check_gradient
from gia_lab.core.models import (AttackConfig, Batch, BlockStyle, BNMode, ExperimentConfig, LayerStats, ModelConfig,
                                 SharingPolicy)
from gia_lab.experiments.reports import write_json
from gia_lab.federated import client_step
from gia_lab.nn import (BNState, Model, ModelParams, batchnorm_forward, bn_input_grad_training,
                        build_gradient_program, build_model)
from gia_lab.nn.gradients import cached_gradient_program
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

TINY_MODEL = ModelConfig(block_style=BlockStyle.POST_ACTIVATION, depth=1, width_multiplier=1,
                         skip_connections=True, input_shape=(3, 8, 8), num_classes=4, base_channels=4)
TINY_BATCH = 2
CASES = 100
RECOVERY_MOMENTA = (1.0, 0.1, 0.5, 0.01, 0.9)


@dataclass
class GateResult:
    """Outcome of one check: the worst error observed against its threshold."""
    gate: int
    name: str
    threshold: float
    error: float
    details: Dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.error)) and self.error < self.threshold

    def to_dict(self) -> Dict[str, Any]:
        return {'gate': self.gate, 'name': self.name, 'threshold': self.threshold, 'error': self.error,
                'passed': self.passed, 'details': self.details}


def _relative(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


def _random_batch(rng: np.random.Generator, config: ModelConfig, size: int) -> Batch:
    images = rng.standard_normal((size,) + config.input_shape)
    return Batch(images, tuple(int(y) for y in rng.integers(0, config.num_classes, size)))


def _random_running(model: Model, params: ModelParams, rng: np.random.Generator) -> ModelParams:
    stats = {name: LayerStats(rng.normal(0.0, 0.5, channels), rng.uniform(0.5, 2.0, channels))
             for name, channels in model.bn_layers.items()}
    return params.with_running_stats(stats)


def gate_parameter_gradients(seed: int) -> GateResult:
    """Loss gradients of every parameter and of the input against central differences, in both modes."""
    rng = np.random.default_rng(seed)
    model, params = build_model(TINY_MODEL, seed)
    params = _random_running(model, params, rng)
    batch = _random_batch(rng, TINY_MODEL, TINY_BATCH)
    errors: Dict[str, float] = {}
    for mode in BNMode:
        program = build_gradient_program(model, TINY_BATCH, mode)
        bindings = program.bindings(params, batch.images, batch.labels)
        for name, leaf in program.parameters.items():
            errors[f'{mode.value}.{name}'] = check_gradient(program.graph, program.loss, leaf, params[name],
                                                            bindings=bindings)
        errors[f'{mode.value}.x'] = check_gradient(program.graph, program.loss, program.images, batch.images,
                                                   bindings=bindings)
    worst = max(errors, key=errors.get)
    return GateResult(1, 'parameter and input gradients', 1e-6, errors[worst],
                      {'checked': len(errors), 'worst': worst})


def gate_second_order(seed: int) -> GateResult:
    """Gradient of the cosine discrepancy with respect to the images against central differences."""
    rng = np.random.default_rng(seed)
    model, params = build_model(TINY_MODEL, seed)
    errors: Dict[str, float] = {}
    for mode in BNMode:
        update = client_step(model, params, _random_batch(rng, TINY_MODEL, TINY_BATCH),
                             SharingPolicy(mode=mode, share_running_stats=False))
        config = AttackConfig(lambda_tv=0.0, lambda_bn=0.0, iterations=1).validate()
        objective = build_objective(model, update, config, use_bn=False)
        candidate = rng.standard_normal((TINY_BATCH,) + TINY_MODEL.input_shape)
        bindings = objective.program.bindings(params, candidate, update.labels)
        errors[mode.value] = check_gradient(objective.graph, objective.discrepancy, objective.program.images,
                                            candidate, bindings=bindings)
    worst = max(errors, key=errors.get)
    return GateResult(2, 'discrepancy input gradient', 1e-5, errors[worst], {'per_mode': errors})


def gate_training_projection(seed: int, cases: int = CASES) -> GateResult:
    """Training-mode input gradients sum to zero per channel and are orthogonal to x_hat."""
    rng = np.random.default_rng(seed)
    worst_sum = worst_dot = 0.0
    for _ in range(cases):
        b, c, h, w = (int(v) for v in rng.integers(1, 5, 4))
        b = max(b, 2)
        x = rng.normal(rng.normal(), rng.uniform(0.5, 3.0), (b, c, h, w))
        state = BNState.initial(c, epsilon=0.0)
        _, cache, _ = batchnorm_forward(x, state)
        dx = bn_input_grad_training(rng.standard_normal(x.shape), cache)
        worst_sum = max(worst_sum, float(np.max(np.abs(dx.sum(axis=(0, 2, 3))))))
        worst_dot = max(worst_dot, float(np.max(np.abs((dx * cache.normalized).sum(axis=(0, 2, 3))))))
    return GateResult(3, 'training-mode gradient projection', 1e-9, max(worst_sum, worst_dot),
                      {'cases': cases, 'channel_sum': worst_sum, 'xhat_dot': worst_dot})


def gate_statistic_recovery(seed: int, cases: int = CASES) -> GateResult:
    """Batch statistics recovered from shared snapshots match the ones the client computed."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    per_momentum = cases // len(RECOVERY_MOMENTA)
    policy = SharingPolicy(mode=BNMode.TRAINING, share_running_stats=True)
    for momentum in RECOVERY_MOMENTA:
        model, params = build_model(replace(TINY_MODEL, momentum=momentum), seed)
        program = cached_gradient_program(model, TINY_BATCH, BNMode.TRAINING)
        for _ in range(per_momentum):
            case_params = _random_running(model, params, rng)
            batch = _random_batch(rng, TINY_MODEL, TINY_BATCH)
            recovered = recover_update_stats(client_step(model, case_params, batch, policy))
            truth = program.batch_stats(case_params, batch.images)
            for name, stats in truth.items():
                worst = max(worst, _relative(recovered[name].mean, stats.mean),
                            _relative(recovered[name].var, stats.var))
    return GateResult(4, 'statistic recovery', 1e-10, worst,
                      {'cases': per_momentum * len(RECOVERY_MOMENTA), 'momenta': list(RECOVERY_MOMENTA)})


def gate_regularizer_values(seed: int) -> GateResult:
    """Zero points of the regularizers and of the discrepancy."""
    rng = np.random.default_rng(seed)
    constant = np.full((2, 3, 8, 8), rng.normal())
    tv = abs(total_variation(constant))
    stats = {'bn': LayerStats(rng.normal(size=4), rng.uniform(0.5, 2.0, 4))}
    bn = abs(r_bn({'bn': (stats['bn'].mean, stats['bn'].var)}, stats))
    g = {'w': rng.standard_normal((4, 3)), 'b': rng.standard_normal(4)}
    cos = abs(cosine_discrepancy(g, g))
    # each value has its own threshold; report the worst ratio against it
    ratios = {'tv': tv / 1e-6, 'r_bn': bn / 1e-9, 'cosine': cos / 1e-12}
    return GateResult(5, 'regularizer zero points', 1.0, max(ratios.values()),
                      {'tv': tv, 'r_bn': bn, 'cosine': cos})


GATES: List[Callable[[int], GateResult]] = [
    gate_parameter_gradients,
    gate_second_order,
    gate_training_projection,
    gate_statistic_recovery,
    gate_regularizer_values,
]


def run_selftest(seed: int = 0) -> List[GateResult]:
    results = []
    for gate in GATES:
        started = time.perf_counter()
        result = gate(seed)
        result.seconds = time.perf_counter() - started
        level = logger.info if result.passed else logger.error
        level(f"Gate {result.gate} ({result.name}): {'pass' if result.passed else 'FAIL'}",
              extra={'context': {'error': result.error, 'threshold': result.threshold,
                                 'seconds': round(result.seconds, 3)}})
        results.append(result)
    return results


def cmd_selftest(config: ExperimentConfig) -> Tuple[Path, bool]:
    """Run every gate and write selftest.json; returns the path and whether all passed."""
    results = run_selftest(config.seed)
    passed = all(r.passed for r in results)
    path = write_json(Path(config.out_dir) / 'selftest.json',
                      {'seed': config.seed, 'passed': passed, 'gates': [r.to_dict() for r in results]})
    return path, passed
