"""Primitive operations of the computation graph.

Every primitive knows how to infer its output shape, compute its forward value
on numpy arrays and express its vector-Jacobian product as *new graph nodes*
built from primitives. Because backward passes are themselves graphs, they can
be differentiated again.
"""
from typing import TYPE_CHECKING, Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from gia_lab.autodiff import convolution
from gia_lab.core.exceptions import GraphError, ShapeError

if TYPE_CHECKING:
    from gia_lab.autodiff.graph import Var

Shape = Tuple[int, ...]
Attrs = Mapping[str, Any]


class Primitive:
    """Base class for graph primitives."""

    name: str = ''
    differentiable: bool = True

    def infer_shape(self, shapes: Sequence[Shape], attrs: Attrs) -> Shape:
        raise NotImplementedError

    def forward(self, values: Sequence[np.ndarray], attrs: Attrs) -> np.ndarray:
        raise NotImplementedError

    def vjp(self, g: 'Var', out: 'Var', inputs: Sequence['Var'], attrs: Attrs) -> List[Optional['Var']]:
        """Return one adjoint contribution per input (None for no contribution)."""
        raise NotImplementedError


PRIMITIVES: Dict[str, Primitive] = {}


def register_primitive(primitive: Primitive) -> Primitive:
    """Add a primitive to the registry; names must be unique."""
    if not primitive.name:
        raise GraphError("Primitive has no name")
    existing = PRIMITIVES.get(primitive.name)
    if existing is not None and type(existing) is not type(primitive):
        raise GraphError(f"Primitive '{primitive.name}' is already registered")
    PRIMITIVES[primitive.name] = primitive
    return primitive


def get_primitive(name: str) -> Primitive:
    try:
        return PRIMITIVES[name]
    except KeyError:
        raise GraphError(f"Unknown primitive '{name}'") from None


def _expect_arity(name: str, shapes: Sequence[Shape], count: int):
    if len(shapes) != count:
        raise GraphError(f"{name} takes {count} inputs, got {len(shapes)}")


def normalize_axes(axis, ndim: int) -> Tuple[int, ...]:
    """Turn None, an int or a sequence into a sorted tuple of non-negative axes."""
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, (int, np.integer)):
        axis = (axis,)
    axes = []
    for a in axis:
        a = int(a)
        if not -ndim <= a < ndim:
            raise ShapeError(f"Axis {a} out of range for {ndim}-D tensor")
        axes.append(a % ndim)
    if len(set(axes)) != len(axes):
        raise ShapeError(f"Repeated axis in {tuple(axis)}")
    return tuple(sorted(axes))


def reduced_shape(shape: Shape, axes: Tuple[int, ...], keepdims: bool) -> Shape:
    if keepdims:
        return tuple(1 if i in axes else s for i, s in enumerate(shape))
    return tuple(s for i, s in enumerate(shape) if i not in axes)


def sum_to_shape(value: np.ndarray, shape: Shape) -> np.ndarray:
    """Reduce a broadcast array back to ``shape``."""
    if value.shape == tuple(shape):
        return value
    lead = value.ndim - len(shape)
    if lead:
        value = value.sum(axis=tuple(range(lead)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and value.shape[i] != 1)
    if axes:
        value = value.sum(axis=axes, keepdims=True)
    return value.reshape(shape)


# Elementwise binary primitives. Inputs have identical shapes; Var inserts
# explicit broadcast nodes before calling them.

class _Binary(Primitive):
    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 2)
        if tuple(shapes[0]) != tuple(shapes[1]):
            raise ShapeError(f"{self.name}: shapes {shapes[0]} and {shapes[1]} differ")
        return tuple(shapes[0])


class Add(_Binary):
    name = 'add'

    def forward(self, values, attrs):
        return values[0] + values[1]

    def vjp(self, g, out, inputs, attrs):
        return [g, g]


class Sub(_Binary):
    name = 'sub'

    def forward(self, values, attrs):
        return values[0] - values[1]

    def vjp(self, g, out, inputs, attrs):
        return [g, -g]


class Mul(_Binary):
    name = 'mul'

    def forward(self, values, attrs):
        return values[0] * values[1]

    def vjp(self, g, out, inputs, attrs):
        a, b = inputs
        return [g * b, g * a]


class Div(_Binary):
    name = 'div'

    def forward(self, values, attrs):
        return values[0] / values[1]

    def vjp(self, g, out, inputs, attrs):
        _, b = inputs
        return [g / b, -(g * out) / b]


# Elementwise unary primitives

class _Unary(Primitive):
    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 1)
        return tuple(shapes[0])


class Neg(_Unary):
    name = 'neg'

    def forward(self, values, attrs):
        return -values[0]

    def vjp(self, g, out, inputs, attrs):
        return [-g]


class Sqrt(_Unary):
    name = 'sqrt'

    def forward(self, values, attrs):
        return np.sqrt(values[0])

    def vjp(self, g, out, inputs, attrs):
        return [g / (out * 2.0)]


class Square(_Unary):
    name = 'square'

    def forward(self, values, attrs):
        return np.square(values[0])

    def vjp(self, g, out, inputs, attrs):
        return [g * inputs[0] * 2.0]


class Exp(_Unary):
    name = 'exp'

    def forward(self, values, attrs):
        return np.exp(values[0])

    def vjp(self, g, out, inputs, attrs):
        return [g * out]


class Log(_Unary):
    name = 'log'

    def forward(self, values, attrs):
        return np.log(values[0])

    def vjp(self, g, out, inputs, attrs):
        return [g / inputs[0]]


class Relu(_Unary):
    name = 'relu'

    def forward(self, values, attrs):
        return np.maximum(values[0], 0.0)

    def vjp(self, g, out, inputs, attrs):
        # subgradient at 0 is 0
        return [g * inputs[0].gt_mask()]


class GtMask(_Unary):
    """1.0 where the input is strictly positive, else 0.0."""
    name = 'gt_mask'
    differentiable = False

    def forward(self, values, attrs):
        return (values[0] > 0.0).astype(np.float64)

    def vjp(self, g, out, inputs, attrs):
        return [None]


class ArgmaxMask(Primitive):
    """One-hot indicator of the first maximum along ``axis``."""
    name = 'argmax_mask'
    differentiable = False

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 1)
        return tuple(shapes[0])

    def forward(self, values, attrs):
        x = values[0]
        axis = attrs['axis']
        idx = np.expand_dims(np.argmax(x, axis=axis), axis)
        mask = np.zeros_like(x)
        np.put_along_axis(mask, idx, 1.0, axis=axis)
        return mask

    def vjp(self, g, out, inputs, attrs):
        return [None]


# Shape manipulation

class BroadcastTo(Primitive):
    name = 'broadcast_to'

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 1)
        target = tuple(attrs['shape'])
        try:
            result = np.broadcast_shapes(tuple(shapes[0]), target)
        except ValueError:
            raise ShapeError(f"Cannot broadcast {shapes[0]} to {target}") from None
        if result != target:
            raise ShapeError(f"Cannot broadcast {shapes[0]} to {target}")
        return target

    def forward(self, values, attrs):
        return np.broadcast_to(values[0], attrs['shape'])

    def vjp(self, g, out, inputs, attrs):
        return [g.sum_to(inputs[0].shape)]


class SumTo(Primitive):
    """Adjoint of broadcast_to: sum a tensor down to a broadcast-compatible shape."""
    name = 'sum_to'

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 1)
        target = tuple(attrs['shape'])
        try:
            ok = np.broadcast_shapes(target, tuple(shapes[0])) == tuple(shapes[0])
        except ValueError:
            ok = False
        if not ok:
            raise ShapeError(f"Cannot sum {shapes[0]} down to {target}")
        return target

    def forward(self, values, attrs):
        return sum_to_shape(values[0], attrs['shape'])

    def vjp(self, g, out, inputs, attrs):
        return [g.broadcast_to(inputs[0].shape)]


class Reshape(Primitive):
    name = 'reshape'

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 1)
        target = tuple(attrs['shape'])
        if int(np.prod(target, dtype=np.int64)) != int(np.prod(shapes[0], dtype=np.int64)):
            raise ShapeError(f"Cannot reshape {shapes[0]} to {target}")
        return target

    def forward(self, values, attrs):
        return values[0].reshape(attrs['shape'])

    def vjp(self, g, out, inputs, attrs):
        return [g.reshape(inputs[0].shape)]


class Transpose(Primitive):
    name = 'transpose'

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 1)
        axes = tuple(attrs['axes'])
        if sorted(axes) != list(range(len(shapes[0]))):
            raise ShapeError(f"Invalid permutation {axes} for shape {shapes[0]}")
        return tuple(shapes[0][a] for a in axes)

    def forward(self, values, attrs):
        return np.transpose(values[0], attrs['axes'])

    def vjp(self, g, out, inputs, attrs):
        return [g.transpose(tuple(int(i) for i in np.argsort(attrs['axes'])))]


class Pad(Primitive):
    """Zero padding; ``widths`` holds one (before, after) pair per axis."""
    name = 'pad'

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 1)
        widths = attrs['widths']
        if len(widths) != len(shapes[0]) or any(lo < 0 or hi < 0 for lo, hi in widths):
            raise ShapeError(f"Invalid pad widths {widths} for shape {shapes[0]}")
        return tuple(s + lo + hi for s, (lo, hi) in zip(shapes[0], widths))

    def forward(self, values, attrs):
        return np.pad(values[0], attrs['widths'])

    def vjp(self, g, out, inputs, attrs):
        bounds = tuple((lo, lo + s) for s, (lo, _) in zip(inputs[0].shape, attrs['widths']))
        return [g.slice(bounds)]


class Slice(Primitive):
    """Contiguous slice; ``bounds`` holds one (start, stop) pair per axis."""
    name = 'slice'

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 1)
        bounds = attrs['bounds']
        if len(bounds) != len(shapes[0]):
            raise ShapeError(f"Slice bounds {bounds} do not match shape {shapes[0]}")
        for s, (start, stop) in zip(shapes[0], bounds):
            if not 0 <= start <= stop <= s:
                raise ShapeError(f"Slice bounds {bounds} out of range for shape {shapes[0]}")
        return tuple(stop - start for start, stop in bounds)

    def forward(self, values, attrs):
        return values[0][tuple(slice(start, stop) for start, stop in attrs['bounds'])]

    def vjp(self, g, out, inputs, attrs):
        widths = tuple((start, s - stop) for s, (start, stop) in zip(inputs[0].shape, attrs['bounds']))
        return [g.pad(widths)]


# Reductions

class _Reduction(Primitive):
    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 1)
        axes = normalize_axes(attrs['axis'], len(shapes[0]))
        return reduced_shape(tuple(shapes[0]), axes, attrs['keepdims'])

    def _expand(self, g, inputs, attrs):
        shape = inputs[0].shape
        axes = normalize_axes(attrs['axis'], len(shape))
        return g.reshape(reduced_shape(shape, axes, True)).broadcast_to(shape)


class Sum(_Reduction):
    name = 'sum'

    def forward(self, values, attrs):
        return np.sum(values[0], axis=normalize_axes(attrs['axis'], values[0].ndim),
                      keepdims=attrs['keepdims'])

    def vjp(self, g, out, inputs, attrs):
        return [self._expand(g, inputs, attrs)]


class Mean(_Reduction):
    name = 'mean'

    def forward(self, values, attrs):
        return np.mean(values[0], axis=normalize_axes(attrs['axis'], values[0].ndim),
                       keepdims=attrs['keepdims'])

    def vjp(self, g, out, inputs, attrs):
        shape = inputs[0].shape
        count = int(np.prod([shape[a] for a in normalize_axes(attrs['axis'], len(shape))], dtype=np.int64))
        return [self._expand(g, inputs, attrs) * (1.0 / count)]


class Max(_Reduction):
    """Maximum along a single axis; the adjoint flows to the first maximizer."""
    name = 'max'

    def infer_shape(self, shapes, attrs):
        if not isinstance(attrs['axis'], int):
            raise ShapeError("max reduces over exactly one axis")
        return super().infer_shape(shapes, attrs)

    def forward(self, values, attrs):
        return np.max(values[0], axis=attrs['axis'], keepdims=attrs['keepdims'])

    def vjp(self, g, out, inputs, attrs):
        return [self._expand(g, inputs, attrs) * inputs[0].argmax_mask(attrs['axis'])]


# Linear algebra and convolution

class MatMul(Primitive):
    name = 'matmul'

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 2)
        a, b = shapes
        if len(a) != 2 or len(b) != 2 or a[1] != b[0]:
            raise ShapeError(f"matmul shapes {a} and {b} are incompatible")
        return (a[0], b[1])

    def forward(self, values, attrs):
        return values[0] @ values[1]

    def vjp(self, g, out, inputs, attrs):
        a, b = inputs
        return [g @ b.T, a.T @ g]


class Conv2d(Primitive):
    name = 'conv2d'

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 2)
        return convolution.conv2d_output_shape(shapes[0], shapes[1], attrs['stride'], attrs['padding'])

    def forward(self, values, attrs):
        return convolution.conv2d(values[0], values[1], attrs['stride'], attrs['padding'])

    def vjp(self, g, out, inputs, attrs):
        x, w = inputs
        graph = g.graph
        gx = graph.apply('conv2d_input_grad', [g, w], input_shape=x.shape,
                         stride=attrs['stride'], padding=attrs['padding'])
        gw = graph.apply('conv2d_weight_grad', [x, g], kernel_shape=w.shape,
                         stride=attrs['stride'], padding=attrs['padding'])
        return [gx, gw]


class Conv2dInputGrad(Primitive):
    """conv2d_input_grad(g, w): adjoint of conv2d wrt its input."""
    name = 'conv2d_input_grad'

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 2)
        expected = convolution.conv2d_output_shape(attrs['input_shape'], shapes[1],
                                                   attrs['stride'], attrs['padding'])
        if tuple(shapes[0]) != expected:
            raise ShapeError(f"conv2d_input_grad: cotangent {shapes[0]} does not match {expected}")
        return tuple(attrs['input_shape'])

    def forward(self, values, attrs):
        return convolution.conv2d_input_grad(values[0], values[1], attrs['input_shape'],
                                             attrs['stride'], attrs['padding'])

    def vjp(self, g, out, inputs, attrs):
        cot, w = inputs
        graph = g.graph
        # linear in cot: adjoint is the forward convolution of g
        g_cot = graph.apply('conv2d', [g, w], stride=attrs['stride'], padding=attrs['padding'])
        g_w = graph.apply('conv2d_weight_grad', [g, cot], kernel_shape=w.shape,
                          stride=attrs['stride'], padding=attrs['padding'])
        return [g_cot, g_w]


class Conv2dWeightGrad(Primitive):
    """conv2d_weight_grad(x, g): adjoint of conv2d wrt its kernel."""
    name = 'conv2d_weight_grad'

    def infer_shape(self, shapes, attrs):
        _expect_arity(self.name, shapes, 2)
        expected = convolution.conv2d_output_shape(shapes[0], attrs['kernel_shape'],
                                                   attrs['stride'], attrs['padding'])
        if tuple(shapes[1]) != expected:
            raise ShapeError(f"conv2d_weight_grad: cotangent {shapes[1]} does not match {expected}")
        return tuple(attrs['kernel_shape'])

    def forward(self, values, attrs):
        return convolution.conv2d_weight_grad(values[0], values[1], attrs['kernel_shape'],
                                              attrs['stride'], attrs['padding'])

    def vjp(self, g, out, inputs, attrs):
        x, cot = inputs
        graph = g.graph
        g_x = graph.apply('conv2d_input_grad', [cot, g], input_shape=x.shape,
                          stride=attrs['stride'], padding=attrs['padding'])
        g_cot = graph.apply('conv2d', [x, g], stride=attrs['stride'], padding=attrs['padding'])
        return [g_x, g_cot]


for _primitive in (Add(), Sub(), Mul(), Div(), Neg(), Sqrt(), Square(), Exp(), Log(), Relu(),
                   GtMask(), ArgmaxMask(), BroadcastTo(), SumTo(), Reshape(), Transpose(),
                   Pad(), Slice(), Sum(), Mean(), Max(), MatMul(), Conv2d(), Conv2dInputGrad(),
                   Conv2dWeightGrad()):
    register_primitive(_primitive)
