"""Hand-written BatchNorm: forward pass, running statistics and both input-gradient modes.

Inference mode normalizes with the stored running statistics, so the input
gradient is a per-channel rescaling of the gradient of the normalized output:

    dx = dx_hat / sigma,  sigma = sqrt(running_var + eps)

Training mode normalizes with the statistics of the current batch, which
couples every element of a channel:

    dx = (dx_hat - x_hat * mean(dx_hat * x_hat) - mean(dx_hat)) / sigma

with means over the n = B*H*W elements of the channel and the biased batch
variance inside sigma. The second form projects out the components along
the constant vector and along x_hat, which is what makes training-mode
updates hard to invert.

The two gradient helpers accept either numpy arrays or graph Vars so the
same expressions serve the numeric checks and the differentiable backward
of the ``batchnorm_normalize`` primitive.
"""
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple, Union

import numpy as np

from gia_lab.autodiff import Primitive, Var, register_primitive
from gia_lab.core.exceptions import PreconditionError, ShapeError
from gia_lab.core.models import BNMode, LayerStats

ArrayLike = Union[np.ndarray, Var]
CHANNEL_AXES = (0, 2, 3)


@dataclass(frozen=True, eq=False)
class BNState:
    """
    Parameters and running statistics of one BatchNorm layer.

    Args:
        gamma: Per-channel scale
        beta: Per-channel shift
        running_mean: Running mean per channel
        running_var: Running variance per channel, unbiased convention
        momentum: Weight of the new batch in the running update
        epsilon: Variance stabilizer
        mode: Training or inference
    """
    gamma: np.ndarray
    beta: np.ndarray
    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1
    epsilon: float = 1e-5
    mode: BNMode = BNMode.TRAINING

    def __post_init__(self):
        for name in ('gamma', 'beta', 'running_mean', 'running_var'):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        object.__setattr__(self, 'mode', BNMode(self.mode))
        shapes = {a.shape for a in (self.gamma, self.beta, self.running_mean, self.running_var)}
        if len(shapes) != 1 or self.gamma.ndim != 1:
            raise ShapeError("gamma, beta and running statistics must share one channel dimension")
        if np.any(self.running_var < 0):
            raise PreconditionError("running_var must be non-negative")
        if not 0.0 < self.momentum <= 1.0:
            raise PreconditionError(f"momentum must be in (0, 1], got {self.momentum}")
        if self.epsilon < 0.0:
            raise PreconditionError(f"epsilon must be non-negative, got {self.epsilon}")

    @classmethod
    def initial(cls, channels: int, momentum: float = 0.1, epsilon: float = 1e-5,
                mode: BNMode = BNMode.TRAINING) -> 'BNState':
        """gamma=1, beta=0, running mean 0 and running variance 1."""
        return cls(np.ones(channels), np.zeros(channels), np.zeros(channels), np.ones(channels),
                   momentum, epsilon, mode)

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]

    @property
    def running_stats(self) -> LayerStats:
        return LayerStats(self.running_mean, self.running_var)


@dataclass(frozen=True, eq=False)
class BNForwardCache:
    """
    Values saved by a forward pass.

    Args:
        batch_mean: Per-channel batch mean
        batch_var_biased: Per-channel batch variance with divisor n
        normalized: x_hat
        n: Elements per channel (B*H*W)
        epsilon: Variance stabilizer used
    """
    batch_mean: np.ndarray
    batch_var_biased: np.ndarray
    normalized: np.ndarray
    n: int
    epsilon: float

    @property
    def sigma(self) -> np.ndarray:
        return np.sqrt(self.batch_var_biased + self.epsilon)


def _per_channel(values: ArrayLike) -> ArrayLike:
    return values.reshape(1, -1, 1, 1)


def elements_per_channel(shape: Tuple[int, ...]) -> int:
    return int(shape[0] * shape[2] * shape[3])


def batch_statistics(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Per-channel mean and biased variance of a B x C x H x W array."""
    mean = x.mean(axis=CHANNEL_AXES)
    var = ((x - _per_channel(mean)) ** 2).mean(axis=CHANNEL_AXES)
    return mean, var


def update_running_stats(running: LayerStats, batch_mean: np.ndarray, batch_var_biased: np.ndarray,
                         n: int, momentum: float) -> LayerStats:
    """
    Momentum update of running statistics.

    The batch variance enters with the unbiased divisor n-1.
    """
    if n < 2:
        raise PreconditionError(f"Running variance needs n >= 2 elements per channel, got {n}")
    unbiased = batch_var_biased * (n / (n - 1))
    return LayerStats(
        mean=(1.0 - momentum) * running.mean + momentum * batch_mean,
        var=(1.0 - momentum) * running.var + momentum * unbiased,
    )


def batchnorm_forward(x: np.ndarray, state: BNState) -> Tuple[np.ndarray, BNForwardCache, BNState]:
    """Normalize ``x`` and, in training mode, advance the running statistics."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 4 or x.shape[1] != state.channels:
        raise ShapeError(f"Input {x.shape} does not match {state.channels} BatchNorm channels")
    n = elements_per_channel(x.shape)
    mean, var = batch_statistics(x)

    if state.mode == BNMode.TRAINING:
        if n < 2:
            raise PreconditionError(f"Training-mode BatchNorm needs n >= 2, got {n}")
        center, scale_var = mean, var
        running = update_running_stats(state.running_stats, mean, var, n, state.momentum)
        updated = replace(state, running_mean=running.mean, running_var=running.var)
    else:
        center, scale_var = state.running_mean, state.running_var
        updated = state

    normalized = (x - _per_channel(center)) / np.sqrt(_per_channel(scale_var) + state.epsilon)
    y = _per_channel(state.gamma) * normalized + _per_channel(state.beta)
    cache = BNForwardCache(batch_mean=mean, batch_var_biased=var, normalized=normalized,
                           n=n, epsilon=state.epsilon)
    return y, cache, updated


def bn_input_grad_inference(g_xhat: ArrayLike, sigma: ArrayLike) -> ArrayLike:
    """Input gradient with frozen running statistics; ``sigma`` is the per-channel std."""
    if isinstance(sigma, np.ndarray) and np.any(sigma <= 0):
        raise PreconditionError("sigma must be positive")
    if sigma.ndim == 1:
        sigma = _per_channel(sigma)
    return g_xhat / sigma


def training_input_grad(g_xhat: ArrayLike, xhat: ArrayLike, sigma: ArrayLike) -> ArrayLike:
    """Training-mode input gradient from x_hat and the 1 x C x 1 x 1 batch std."""
    correlation = (g_xhat * xhat).mean(axis=CHANNEL_AXES, keepdims=True)
    offset = g_xhat.mean(axis=CHANNEL_AXES, keepdims=True)
    return (g_xhat - xhat * correlation - offset) / sigma


def bn_input_grad_training(g_xhat: np.ndarray, cache: BNForwardCache) -> np.ndarray:
    """Input gradient when the batch statistics are part of the function."""
    if cache.n < 2:
        raise PreconditionError(f"Training-mode gradient needs n >= 2, got {cache.n}")
    if np.shape(g_xhat) != cache.normalized.shape:
        raise ShapeError(f"Gradient {np.shape(g_xhat)} does not match cache {cache.normalized.shape}")
    return training_input_grad(np.asarray(g_xhat, dtype=np.float64), cache.normalized,
                               _per_channel(cache.sigma))


class BatchNormNormalize(Primitive):
    """
    x -> x_hat for one BatchNorm layer.

    Training mode takes [x]; inference mode takes [x, running_mean, running_var]
    and treats the statistics as constants.
    """
    name = 'batchnorm_normalize'

    def infer_shape(self, shapes, attrs):
        x_shape = tuple(shapes[0])
        if len(x_shape) != 4:
            raise ShapeError(f"BatchNorm expects B x C x H x W input, got {x_shape}")
        if BNMode(attrs['mode']) == BNMode.INFERENCE:
            if len(shapes) != 3 or tuple(shapes[1]) != (x_shape[1],) or tuple(shapes[2]) != (x_shape[1],):
                raise ShapeError("Inference BatchNorm needs per-channel running mean and variance")
        elif len(shapes) != 1:
            raise ShapeError("Training BatchNorm takes only the input")
        elif elements_per_channel(x_shape) < 2:
            raise PreconditionError("Training-mode BatchNorm needs n >= 2")
        return x_shape

    def forward(self, values, attrs):
        x = values[0]
        if BNMode(attrs['mode']) == BNMode.INFERENCE:
            mean, var = values[1], values[2]
        else:
            mean, var = batch_statistics(x)
        return (x - _per_channel(mean)) / np.sqrt(_per_channel(var) + attrs['epsilon'])

    def vjp(self, g, out, inputs, attrs):
        epsilon = attrs['epsilon']
        if BNMode(attrs['mode']) == BNMode.INFERENCE:
            sigma = (inputs[2] + epsilon).sqrt()
            return [bn_input_grad_inference(g, sigma), None, None]
        x = inputs[0]
        centered = x - x.mean(axis=CHANNEL_AXES, keepdims=True)
        sigma = ((centered * centered).mean(axis=CHANNEL_AXES, keepdims=True) + epsilon).sqrt()
        return [training_input_grad(g, out, sigma)]


register_primitive(BatchNormNormalize())


@dataclass(frozen=True)
class BNTrace:
    """Graph nodes holding a layer's batch statistics (biased variance)."""
    name: str
    mean: Var
    var: Var
    n: int


def batchnorm_layer(x: Var, gamma: Var, beta: Var, mode: BNMode, epsilon: float, name: str,
                    running: Optional[Tuple[Var, Var]] = None) -> Tuple[Var, BNTrace]:
    """
    BatchNorm inside a graph.

    Returns the layer output and a trace of the batch statistics of ``x``,
    which the attack regularizer compares against target statistics in
    either mode.
    """
    mode = BNMode(mode)
    graph = x.graph
    centered = x - x.mean(axis=CHANNEL_AXES, keepdims=True)
    trace = BNTrace(name=name, mean=x.mean(axis=CHANNEL_AXES),
                    var=(centered * centered).mean(axis=CHANNEL_AXES),
                    n=elements_per_channel(x.shape))
    if mode == BNMode.INFERENCE:
        if running is None:
            raise PreconditionError(f"Inference BatchNorm '{name}' needs running statistics")
        inputs: List[Var] = [x, running[0], running[1]]
    else:
        inputs = [x]
    xhat = graph.apply('batchnorm_normalize', inputs, mode=mode.value, epsilon=float(epsilon))
    return xhat * gamma.reshape(1, -1, 1, 1) + beta.reshape(1, -1, 1, 1), trace
