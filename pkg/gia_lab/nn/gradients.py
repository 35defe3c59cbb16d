"""Loss and parameter gradients as differentiable graph nodes."""
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Sequence, Tuple

import numpy as np

from gia_lab.autodiff import Graph, Var, gradients
from gia_lab.core.exceptions import ShapeError
from gia_lab.core.models import Batch, BNMode, LayerStats
from gia_lab.nn.batchnorm import BNTrace
from gia_lab.nn.loss import one_hot, softmax_cross_entropy
from gia_lab.nn.model import Model, ModelParams


@dataclass(eq=False)
class GradientProgram:
    """
    Graph computing the training loss and its parameter gradients.

    Images, one-hot targets, parameters and (in inference mode) running
    statistics are all leaves, so one program serves every batch of the
    same size. The gradient nodes can be differentiated again, which is
    what the attack objective needs.
    """
    model: Model
    mode: BNMode
    batch_size: int
    graph: Graph
    images: Var
    targets: Var
    parameters: Dict[str, Var]
    running: Dict[str, Tuple[Var, Var]]
    logits: Var
    loss: Var
    gradients: Dict[str, Var]
    traces: Dict[str, BNTrace]

    def bindings(self, params: ModelParams, images: np.ndarray, labels: Sequence[int]) -> Dict[Var, np.ndarray]:
        images = np.asarray(images, dtype=np.float64)
        if images.shape != self.images.shape:
            raise ShapeError(f"Batch {images.shape} does not match program input {self.images.shape}")
        values: Dict[Var, np.ndarray] = {
            self.images: images,
            self.targets: one_hot(labels, self.model.config.num_classes),
        }
        for name, leaf in self.parameters.items():
            values[leaf] = params[name]
        for name, (mean_leaf, var_leaf) in self.running.items():
            stats = params.running_stats[name]
            values[mean_leaf], values[var_leaf] = stats.mean, stats.var
        return values

    def evaluate(self, params: ModelParams, images: np.ndarray,
                 labels: Sequence[int]) -> Tuple[float, Dict[str, np.ndarray]]:
        names = list(self.gradients)
        values = self.graph.eval(self.bindings(params, images, labels),
                                 [self.loss] + [self.gradients[n] for n in names])
        return float(values[0]), dict(zip(names, values[1:]))

    def batch_stats(self, params: ModelParams, images: np.ndarray) -> Dict[str, LayerStats]:
        """Per-layer batch mean and biased variance seen during the forward pass."""
        bindings = self.bindings(params, images, [0] * self.batch_size)
        names = list(self.traces)
        targets = []
        for name in names:
            targets.extend([self.traces[name].mean, self.traces[name].var])
        values = self.graph.eval(bindings, targets)
        return {name: LayerStats(values[2 * i], values[2 * i + 1]) for i, name in enumerate(names)}


def build_gradient_program(model: Model, batch_size: int, mode: BNMode) -> GradientProgram:
    """Build a fresh program on its own graph."""
    mode = BNMode(mode)
    c = model.config
    graph = Graph()
    images = graph.leaf('x', (batch_size,) + c.input_shape)
    targets = graph.leaf('y', (batch_size, c.num_classes))
    parameters = model.parameter_leaves(graph)
    running = model.running_leaves(graph) if mode == BNMode.INFERENCE else {}
    logits, traces = model.forward(images, parameters, mode, running)
    loss = softmax_cross_entropy(logits, targets)
    names = list(parameters)
    grads = gradients(loss, [parameters[n] for n in names], allow_unreachable=True)
    return GradientProgram(
        model=model, mode=mode, batch_size=batch_size, graph=graph, images=images, targets=targets,
        parameters=parameters, running=running, logits=logits, loss=loss,
        gradients=dict(zip(names, grads)), traces={t.name: t for t in traces},
    )


@lru_cache(maxsize=32)
def cached_gradient_program(model: Model, batch_size: int, mode: BNMode) -> GradientProgram:
    """Shared read-mostly program for plain gradient evaluation."""
    return build_gradient_program(model, batch_size, mode)


def loss_and_gradients(model: Model, params: ModelParams, batch: Batch,
                       mode: BNMode) -> Tuple[float, Dict[str, np.ndarray]]:
    """Loss and per-parameter gradients of ``batch``, using BatchNorm in ``mode``."""
    batch.check_labels(model.config.num_classes)
    program = cached_gradient_program(model, batch.size, BNMode(mode))
    return program.evaluate(params, batch.images, batch.labels)
