"""Configurable residual model family."""
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Mapping, Optional, Tuple

import numpy as np

from gia_lab.autodiff import Graph, LeafKind, Var
from gia_lab.core.exceptions import ShapeError
from gia_lab.core.models import BlockStyle, BNMode, LayerStats, ModelConfig
from gia_lab.nn.batchnorm import BNTrace, batchnorm_layer
from gia_lab.utils.debug_logger import LogManager

logger = LogManager.get_logger(__name__)

Shape = Tuple[int, ...]
RunningVars = Mapping[str, Tuple[Var, Var]]


@dataclass(frozen=True)
class BlockSpec:
    """Channel and stride layout of one residual block."""
    index: int
    in_channels: int
    out_channels: int
    stride: int
    has_projection: bool

    @property
    def prefix(self) -> str:
        return f"blocks.{self.index}"


@dataclass(eq=False)
class ModelParams:
    """
    Named parameter tensors plus BatchNorm running statistics.

    Args:
        tensors: Trainable tensors in stable construction order
        running_stats: Running statistics per BatchNorm layer
    """
    tensors: Dict[str, np.ndarray]
    running_stats: Dict[str, LayerStats] = field(default_factory=dict)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def __len__(self) -> int:
        return len(self.tensors)

    @property
    def names(self) -> List[str]:
        return list(self.tensors)

    def copy(self) -> 'ModelParams':
        return ModelParams(
            tensors={k: v.copy() for k, v in self.tensors.items()},
            running_stats={k: LayerStats(s.mean.copy(), s.var.copy()) for k, s in self.running_stats.items()},
        )

    def with_running_stats(self, running_stats: Dict[str, LayerStats]) -> 'ModelParams':
        return ModelParams(tensors=dict(self.tensors), running_stats=dict(running_stats))

    def parameter_count(self) -> int:
        return int(sum(v.size for v in self.tensors.values()))


def _conv(x: Var, weight: Var, stride: int = 1) -> Var:
    padding = (weight.shape[2] - 1) // 2
    return x.conv2d(weight, stride=stride, padding=padding)


def residual_block(x: Var, params: Mapping[str, Var], style: BlockStyle, skip: bool, stride: int,
                   mode: BNMode, epsilon: float, prefix: str = '',
                   running: Optional[RunningVars] = None) -> Tuple[Var, List[BNTrace]]:
    """
    One basic residual block inside a graph.

    ``params`` is keyed by names relative to the block: conv1.weight,
    bn1.gamma, bn1.beta, conv2.weight, bn2.gamma, bn2.beta and, for blocks
    whose shortcut changes shape, shortcut.weight.
    """
    style = BlockStyle(style)
    traces: List[BNTrace] = []
    running = running or {}

    def bn(h: Var, layer: str) -> Var:
        name = f"{prefix}{layer}"
        out, trace = batchnorm_layer(h, params[f"{layer}.gamma"], params[f"{layer}.beta"],
                                     mode, epsilon, name, running.get(name))
        traces.append(trace)
        return out

    if style == BlockStyle.POST_ACTIVATION:
        h = bn(_conv(x, params['conv1.weight'], stride), 'bn1').relu()
        h = bn(_conv(h, params['conv2.weight']), 'bn2')
    else:
        h = _conv(bn(x, 'bn1').relu(), params['conv1.weight'], stride)
        h = _conv(bn(h, 'bn2').relu(), params['conv2.weight'])

    if skip:
        if 'shortcut.weight' in params:
            shortcut = x.conv2d(params['shortcut.weight'], stride=stride, padding=0)
        else:
            shortcut = x
        if shortcut.shape != h.shape:
            raise ShapeError(f"Residual shapes {shortcut.shape} and {h.shape} differ and the "
                             f"block has no projection")
        h = h + shortcut

    if style == BlockStyle.POST_ACTIVATION:
        h = h.relu()
    return h, traces


class Model:
    """
    Forward template of one configured model.

    The template holds only structure; values live in ModelParams and are
    bound as graph leaves, so one template serves any parameter set.
    """

    def __init__(self, config: ModelConfig):
        self.config = config.validate()
        self.stem_channels = config.base_channels
        self.blocks = self._layout()
        self.parameter_shapes = self._parameter_shapes()
        self.bn_layers = self._bn_layers()

    def __repr__(self) -> str:
        c = self.config
        return (f"Model({c.block_style.value}, depth={c.depth}, width={c.width_multiplier}, "
                f"skip={c.skip_connections})")

    def _layout(self) -> Tuple[BlockSpec, ...]:
        c = self.config
        n_stages = min(c.depth, 3)
        specs = []
        in_channels = self.stem_channels
        previous_stage = 0
        for i in range(c.depth):
            stage = i * n_stages // c.depth
            out_channels = c.base_channels * c.width_multiplier * 2 ** stage
            stride = 2 if stage > previous_stage else 1
            projection = c.skip_connections and (in_channels != out_channels or stride != 1)
            specs.append(BlockSpec(i, in_channels, out_channels, stride, projection))
            in_channels, previous_stage = out_channels, stage
        return tuple(specs)

    @property
    def feature_channels(self) -> int:
        return self.blocks[-1].out_channels

    @property
    def pre_activation(self) -> bool:
        return self.config.block_style == BlockStyle.PRE_ACTIVATION

    def _parameter_shapes(self) -> Dict[str, Shape]:
        c = self.config
        shapes: Dict[str, Shape] = {'stem.conv.weight': (self.stem_channels, c.input_shape[0], 3, 3)}
        if not self.pre_activation:
            shapes['stem.bn.gamma'] = shapes['stem.bn.beta'] = (self.stem_channels,)
        for block in self.blocks:
            p = block.prefix
            conv1 = {f'{p}.conv1.weight': (block.out_channels, block.in_channels, 3, 3)}
            conv2 = {f'{p}.conv2.weight': (block.out_channels, block.out_channels, 3, 3)}
            bn1_channels = block.in_channels if self.pre_activation else block.out_channels
            bn1 = {f'{p}.bn1.gamma': (bn1_channels,), f'{p}.bn1.beta': (bn1_channels,)}
            bn2 = {f'{p}.bn2.gamma': (block.out_channels,), f'{p}.bn2.beta': (block.out_channels,)}
            # execution order
            layers = (bn1, conv1, bn2, conv2) if self.pre_activation else (conv1, bn1, conv2, bn2)
            for layer in layers:
                shapes.update(layer)
            if block.has_projection:
                shapes[f'{p}.shortcut.weight'] = (block.out_channels, block.in_channels, 1, 1)
        if self.pre_activation:
            shapes['final_bn.gamma'] = shapes['final_bn.beta'] = (self.feature_channels,)
        shapes['fc.weight'] = (c.num_classes, self.feature_channels)
        shapes['fc.bias'] = (c.num_classes,)
        return shapes

    def _bn_layers(self) -> Dict[str, int]:
        layers = {}
        for name, shape in self.parameter_shapes.items():
            if name.endswith('.gamma'):
                layers[name[:-len('.gamma')]] = shape[0]
        return layers

    def initial_running_stats(self) -> Dict[str, LayerStats]:
        return {name: LayerStats(np.zeros(c), np.ones(c)) for name, c in self.bn_layers.items()}

    def init_params(self, seed: int) -> ModelParams:
        """Kaiming fan-in init for convolutions, 1/sqrt(fan_in) for the classifier, BN at identity."""
        rng = np.random.default_rng(seed)
        tensors: Dict[str, np.ndarray] = {}
        for name, shape in self.parameter_shapes.items():
            if name.endswith('.gamma'):
                tensors[name] = np.ones(shape)
            elif name.endswith('.beta') or name == 'fc.bias':
                tensors[name] = np.zeros(shape)
            elif name == 'fc.weight':
                tensors[name] = rng.standard_normal(shape) * np.sqrt(1.0 / shape[1])
            else:
                fan_in = shape[1] * shape[2] * shape[3]
                tensors[name] = rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)
        return ModelParams(tensors=tensors, running_stats=self.initial_running_stats())

    def parameter_leaves(self, graph: Graph) -> Dict[str, Var]:
        return {name: graph.leaf(name, shape, LeafKind.PARAMETER)
                for name, shape in self.parameter_shapes.items()}

    def running_leaves(self, graph: Graph) -> Dict[str, Tuple[Var, Var]]:
        return {name: (graph.leaf(f"running.{name}.mean", (c,)), graph.leaf(f"running.{name}.var", (c,)))
                for name, c in self.bn_layers.items()}

    def forward(self, x: Var, params: Mapping[str, Var], mode: BNMode,
                running: Optional[RunningVars] = None) -> Tuple[Var, List[BNTrace]]:
        """Logits of ``x`` plus the batch-statistic trace of every BatchNorm layer."""
        c = self.config
        if tuple(x.shape[1:]) != c.input_shape:
            raise ShapeError(f"Input {x.shape} does not match model input {c.input_shape}")
        traces: List[BNTrace] = []
        h = _conv(x, params['stem.conv.weight'])
        if not self.pre_activation:
            h, trace = batchnorm_layer(h, params['stem.bn.gamma'], params['stem.bn.beta'], mode,
                                       c.epsilon, 'stem.bn', (running or {}).get('stem.bn'))
            traces.append(trace)
            h = h.relu()

        for block in self.blocks:
            prefix = block.prefix + '.'
            block_params = {k[len(prefix):]: v for k, v in params.items() if k.startswith(prefix)}
            h, block_traces = residual_block(h, block_params, c.block_style, c.skip_connections,
                                             block.stride, mode, c.epsilon, prefix, running)
            traces.extend(block_traces)

        if self.pre_activation:
            h, trace = batchnorm_layer(h, params['final_bn.gamma'], params['final_bn.beta'], mode,
                                       c.epsilon, 'final_bn', (running or {}).get('final_bn'))
            traces.append(trace)
            h = h.relu()

        pooled = h.mean(axis=(2, 3))
        logits = pooled @ params['fc.weight'].T + params['fc.bias']
        return logits, traces


def build_model(config: ModelConfig, seed: int) -> Tuple[Model, ModelParams]:
    """Build the forward template and seeded initial parameters."""
    model = Model(config)
    params = model.init_params(seed)
    logger.debug(
        "Built model",
        extra={
            'context': {
                'model': repr(model),
                'parameters': params.parameter_count(),
                'bn_layers': len(model.bn_layers),
                'seed': seed
            }
        }
    )
    return model, params


def basic_block_forward(x: np.ndarray, params: Mapping[str, np.ndarray], style: BlockStyle, skip: bool,
                        stride: int = 1, mode: BNMode = BNMode.TRAINING, epsilon: float = 1e-5,
                        running: Optional[Mapping[str, LayerStats]] = None) -> np.ndarray:
    """
    Evaluate one residual block on numpy inputs.

    ``params`` uses block-relative names; ``running`` maps 'bn1' and 'bn2'
    to running statistics and defaults to the initial ones.
    """
    graph = Graph()
    x = np.asarray(x, dtype=np.float64)
    x_leaf = graph.leaf('x', x.shape)
    bindings = {x_leaf: x}
    param_leaves = {}
    for name, value in params.items():
        value = np.asarray(value, dtype=np.float64)
        param_leaves[name] = graph.leaf(name, value.shape, LeafKind.PARAMETER)
        bindings[param_leaves[name]] = value

    running_leaves = {}
    if BNMode(mode) == BNMode.INFERENCE:
        for layer in ('bn1', 'bn2'):
            channels = params[f'{layer}.gamma'].shape[0]
            stats = (running or {}).get(layer, LayerStats(np.zeros(channels), np.ones(channels)))
            mean_leaf = graph.leaf(f'running.{layer}.mean', (channels,))
            var_leaf = graph.leaf(f'running.{layer}.var', (channels,))
            bindings[mean_leaf], bindings[var_leaf] = stats.mean, stats.var
            running_leaves[layer] = (mean_leaf, var_leaf)

    out, _ = residual_block(x_leaf, param_leaves, style, skip, stride, mode, epsilon, '', running_leaves)
    return graph.eval(bindings, [out])[0]
