"""Append-only computation graph with differentiable reverse mode."""
import threading
from dataclasses import dataclass
from enum import Enum
from types import MappingProxyType
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from gia_lab.autodiff.primitives import get_primitive, normalize_axes
from gia_lab.core.exceptions import GraphError, NonFiniteError, ShapeError

Shape = Tuple[int, ...]
NodeRef = Union['Var', int]

LEAF_OP = 'leaf'
CONSTANT_OP = 'constant'


class LeafKind(str, Enum):
    """Marker separating model parameters from data inputs."""
    PARAMETER = 'parameter'
    DATA = 'data'


@dataclass(frozen=True, eq=False)
class Node:
    """
    One node of a graph.

    Args:
        id: Position in the graph's node store
        op: Primitive name, or 'leaf' / 'constant'
        inputs: Ids of input nodes (always smaller than ``id``)
        shape: Output shape
        attrs: Primitive attributes
        value: Payload of constant nodes
        leaf_kind: Parameter or data marker for leaves
        name: Unique name of a leaf
    """
    id: int
    op: str
    inputs: Tuple[int, ...]
    shape: Shape
    attrs: Mapping[str, Any]
    value: Optional[np.ndarray] = None
    leaf_kind: Optional[LeafKind] = None
    name: Optional[str] = None

    @property
    def is_leaf(self) -> bool:
        return self.op == LEAF_OP


class Graph:
    """
    Append-only node store.

    Nodes are never modified or removed, so ids are stable and any value
    computed for a node stays valid. Appends are serialized with a lock;
    evaluation and differentiation only read existing nodes and can run
    concurrently from several threads.
    """

    def __init__(self):
        self._nodes: List[Node] = []
        self._leaf_names: Dict[str, int] = {}
        self._plans: Dict[Tuple[int, ...], Tuple[int, ...]] = {}
        self._lock = threading.RLock()

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def nodes(self) -> Tuple[Node, ...]:
        return tuple(self._nodes)

    def node(self, ref: NodeRef) -> Node:
        node_id = self._resolve(ref)
        return self._nodes[node_id]

    def var(self, node_id: int) -> 'Var':
        return Var(self, self._resolve(node_id))

    def leaves(self, kind: Optional[LeafKind] = None) -> List[Node]:
        return [n for n in self._nodes if n.is_leaf and (kind is None or n.leaf_kind == kind)]

    def leaf_by_name(self, name: str) -> 'Var':
        try:
            return Var(self, self._leaf_names[name])
        except KeyError:
            raise GraphError(f"No leaf named '{name}'") from None

    # Construction

    def _append(self, **fields) -> 'Var':
        with self._lock:
            node = Node(id=len(self._nodes), **fields)
            self._nodes.append(node)
            return Var(self, node.id)

    def leaf(self, name: str, shape: Sequence[int], kind: LeafKind = LeafKind.DATA) -> 'Var':
        """Add a named input leaf that must be bound at evaluation time."""
        with self._lock:
            if name in self._leaf_names:
                raise GraphError(f"Leaf '{name}' already exists")
            var = self._append(op=LEAF_OP, inputs=(), shape=tuple(int(s) for s in shape),
                               attrs=MappingProxyType({}), leaf_kind=LeafKind(kind), name=name)
            self._leaf_names[name] = var.id
            return var

    def constant(self, value) -> 'Var':
        payload = np.array(value, dtype=np.float64)
        if not np.all(np.isfinite(payload)):
            raise NonFiniteError("Constant contains non-finite values", op=CONSTANT_OP)
        payload.setflags(write=False)
        return self._append(op=CONSTANT_OP, inputs=(), shape=payload.shape,
                            attrs=MappingProxyType({}), value=payload)

    def apply(self, op: str, inputs: Sequence[NodeRef], **attrs) -> 'Var':
        """Append a primitive application; shapes are checked immediately."""
        primitive = get_primitive(op)
        input_ids = tuple(self._resolve(i) for i in inputs)
        shapes = [self._nodes[i].shape for i in input_ids]
        shape = primitive.infer_shape(shapes, attrs)
        return self._append(op=op, inputs=input_ids, shape=tuple(int(s) for s in shape),
                            attrs=MappingProxyType(dict(attrs)))

    # Evaluation

    def _resolve(self, ref: NodeRef) -> int:
        if isinstance(ref, Var):
            if ref.graph is not self:
                raise GraphError("Var belongs to a different graph")
            return ref.id
        if isinstance(ref, str):
            return self.leaf_by_name(ref).id
        node_id = int(ref)
        if not 0 <= node_id < len(self._nodes):
            raise GraphError(f"Node {node_id} does not exist")
        return node_id

    def _plan(self, targets: Tuple[int, ...]) -> Tuple[int, ...]:
        """Ancestors of ``targets`` in id (topological) order; cached per target set."""
        plan = self._plans.get(targets)
        if plan is not None:
            return plan
        seen = set()
        stack = list(targets)
        while stack:
            node_id = stack.pop()
            if node_id in seen:
                continue
            seen.add(node_id)
            stack.extend(self._nodes[node_id].inputs)
        plan = tuple(sorted(seen))
        with self._lock:
            self._plans[targets] = plan
        return plan

    def eval(self, leaf_values: Mapping[Any, Any], targets: Sequence[NodeRef]) -> List[np.ndarray]:
        """
        Evaluate target nodes.

        Args:
            leaf_values: Leaf values keyed by Var, node id or leaf name
            targets: Nodes to return values for

        Returns:
            Fresh arrays, one per target, in target order
        """
        target_ids = tuple(self._resolve(t) for t in targets)
        bound: Dict[int, np.ndarray] = {}
        for key, value in leaf_values.items():
            node_id = self._resolve(key)
            if not self._nodes[node_id].is_leaf:
                raise GraphError(f"Node {node_id} is not a leaf")
            bound[node_id] = np.asarray(value, dtype=np.float64)

        values: Dict[int, np.ndarray] = {}
        for node_id in self._plan(target_ids):
            node = self._nodes[node_id]
            if node.is_leaf:
                if node_id not in bound:
                    raise GraphError(f"Leaf '{node.name}' is not bound")
                value = bound[node_id]
                if value.shape != node.shape:
                    raise ShapeError(f"Leaf '{node.name}' expects shape {node.shape}, got {value.shape}")
            elif node.op == CONSTANT_OP:
                value = node.value
            else:
                with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
                    value = get_primitive(node.op).forward([values[i] for i in node.inputs], node.attrs)
            if not np.all(np.isfinite(value)):
                raise NonFiniteError(f"Node {node_id} ({node.op}) evaluated to a non-finite value",
                                     node_id=node_id, op=node.op)
            values[node_id] = value
        return [np.array(values[t], dtype=np.float64, copy=True) for t in target_ids]

    # Differentiation

    def grad(self, output: NodeRef, wrt: Sequence[NodeRef], allow_unreachable: bool = False) -> List[int]:
        """
        Append nodes computing d(output)/d(wrt).

        The returned nodes use the same primitive set as the forward graph, so
        they can be differentiated again.

        Args:
            output: Scalar-shaped node
            wrt: Nodes to differentiate with respect to
            allow_unreachable: Return zero constants instead of raising for
                nodes the output does not depend on

        Returns:
            Ids of the gradient nodes, one per entry of ``wrt``
        """
        output_id = self._resolve(output)
        if self._nodes[output_id].shape != ():
            raise GraphError(f"grad needs a scalar output, node {output_id} has shape "
                             f"{self._nodes[output_id].shape}")
        wrt_ids = [self._resolve(w) for w in wrt]

        with self._lock:
            ancestors = self._plan((output_id,))
            ancestor_set = set(ancestors)
            for w in wrt_ids:
                if w not in ancestor_set and not allow_unreachable:
                    raise GraphError(f"Output does not depend on node {w}")

            # Nodes lying on a differentiable path from some wrt node to the output
            relevant = {w for w in wrt_ids if w in ancestor_set}
            for node_id in ancestors:
                node = self._nodes[node_id]
                if node_id in relevant or node.is_leaf or node.op == CONSTANT_OP:
                    continue
                if get_primitive(node.op).differentiable and any(i in relevant for i in node.inputs):
                    relevant.add(node_id)

            adjoints: Dict[int, Var] = {}
            if output_id in relevant:
                adjoints[output_id] = self.constant(1.0)
            for node_id in sorted(relevant, reverse=True):
                node = self._nodes[node_id]
                g = adjoints.get(node_id)
                if g is None or node.is_leaf or node.op == CONSTANT_OP:
                    continue
                inputs = [Var(self, i) for i in node.inputs]
                contributions = get_primitive(node.op).vjp(g, Var(self, node_id), inputs, node.attrs)
                for input_id, contribution in zip(node.inputs, contributions):
                    if contribution is None or input_id not in relevant:
                        continue
                    if contribution.shape != self._nodes[input_id].shape:
                        raise GraphError(f"{node.op} produced an adjoint of shape {contribution.shape} "
                                         f"for input of shape {self._nodes[input_id].shape}")
                    if input_id in adjoints:
                        adjoints[input_id] = adjoints[input_id] + contribution
                    else:
                        adjoints[input_id] = contribution

            result = []
            for w in wrt_ids:
                adjoint = adjoints.get(w)
                if adjoint is None:
                    adjoint = self.constant(np.zeros(self._nodes[w].shape))
                result.append(adjoint.id)
            return result


class Var:
    """
    Handle to a graph node with numpy-style operator overloading.

    Binary operators broadcast by inserting explicit ``broadcast_to`` nodes;
    plain numbers and arrays are lifted to constants.
    """

    __array_ufunc__ = None
    __slots__ = ('graph', 'id')

    def __init__(self, graph: Graph, node_id: int):
        self.graph = graph
        self.id = node_id

    def __repr__(self) -> str:
        node = self.node
        return f"Var(id={self.id}, op={node.op}, shape={node.shape})"

    @property
    def node(self) -> Node:
        return self.graph._nodes[self.id]

    @property
    def shape(self) -> Shape:
        return self.node.shape

    @property
    def ndim(self) -> int:
        return len(self.node.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.node.shape, dtype=np.int64))

    def _apply(self, op: str, *others: 'Var', **attrs) -> 'Var':
        return self.graph.apply(op, [self, *others], **attrs)

    def _lift(self, other) -> 'Var':
        if isinstance(other, Var):
            if other.graph is not self.graph:
                raise GraphError("Cannot combine Vars from different graphs")
            return other
        return self.graph.constant(other)

    def _binary(self, op: str, other, reverse: bool = False) -> 'Var':
        other = self._lift(other)
        a, b = (other, self) if reverse else (self, other)
        try:
            shape = np.broadcast_shapes(a.shape, b.shape)
        except ValueError:
            raise ShapeError(f"{op}: shapes {a.shape} and {b.shape} do not broadcast") from None
        return a.broadcast_to(shape)._apply(op, b.broadcast_to(shape))

    def __add__(self, other):
        return self._binary('add', other)

    def __radd__(self, other):
        return self._binary('add', other, reverse=True)

    def __sub__(self, other):
        return self._binary('sub', other)

    def __rsub__(self, other):
        return self._binary('sub', other, reverse=True)

    def __mul__(self, other):
        return self._binary('mul', other)

    def __rmul__(self, other):
        return self._binary('mul', other, reverse=True)

    def __truediv__(self, other):
        return self._binary('div', other)

    def __rtruediv__(self, other):
        return self._binary('div', other, reverse=True)

    def __neg__(self):
        return self._apply('neg')

    def __pow__(self, exponent):
        if exponent == 2:
            return self.square()
        if exponent == 0.5:
            return self.sqrt()
        if exponent == 1:
            return self
        raise GraphError(f"Only powers 0.5, 1 and 2 are supported, got {exponent}")

    def __matmul__(self, other):
        return self._apply('matmul', self._lift(other))

    def __rmatmul__(self, other):
        return self._lift(other)._apply('matmul', self)

    def __getitem__(self, index) -> 'Var':
        if not isinstance(index, tuple):
            index = (index,)
        if len(index) > self.ndim:
            raise ShapeError(f"Too many indices for shape {self.shape}")
        bounds = []
        for axis, size in enumerate(self.shape):
            item = index[axis] if axis < len(index) else slice(None)
            if not isinstance(item, slice):
                raise GraphError("Vars support slice indexing only")
            start, stop, step = item.indices(size)
            if step != 1:
                raise GraphError("Vars support unit-step slices only")
            bounds.append((start, max(start, stop)))
        return self.slice(tuple(bounds))

    # Elementwise

    def sqrt(self) -> 'Var':
        return self._apply('sqrt')

    def square(self) -> 'Var':
        return self._apply('square')

    def exp(self) -> 'Var':
        return self._apply('exp')

    def log(self) -> 'Var':
        return self._apply('log')

    def relu(self) -> 'Var':
        return self._apply('relu')

    def gt_mask(self) -> 'Var':
        return self._apply('gt_mask')

    def argmax_mask(self, axis: int) -> 'Var':
        return self._apply('argmax_mask', axis=normalize_axes(axis, self.ndim)[0])

    # Reductions

    def sum(self, axis=None, keepdims: bool = False) -> 'Var':
        return self._apply('sum', axis=normalize_axes(axis, self.ndim), keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> 'Var':
        return self._apply('mean', axis=normalize_axes(axis, self.ndim), keepdims=keepdims)

    def max(self, axis: int, keepdims: bool = False) -> 'Var':
        return self._apply('max', axis=normalize_axes(axis, self.ndim)[0], keepdims=keepdims)

    # Shapes

    def reshape(self, *shape) -> 'Var':
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        shape = tuple(int(s) for s in shape)
        if shape.count(-1) > 1:
            raise ShapeError("Only one reshape dimension may be -1")
        if -1 in shape:
            known = int(np.prod([s for s in shape if s != -1], dtype=np.int64))
            if known == 0 or self.size % known:
                raise ShapeError(f"Cannot reshape {self.shape} to {shape}")
            shape = tuple(self.size // known if s == -1 else s for s in shape)
        if shape == self.shape:
            return self
        return self._apply('reshape', shape=shape)

    def transpose(self, axes: Optional[Sequence[int]] = None) -> 'Var':
        axes = tuple(reversed(range(self.ndim))) if axes is None else tuple(int(a) for a in axes)
        return self._apply('transpose', axes=axes)

    @property
    def T(self) -> 'Var':
        return self.transpose()

    def broadcast_to(self, shape: Sequence[int]) -> 'Var':
        shape = tuple(int(s) for s in shape)
        if shape == self.shape:
            return self
        return self._apply('broadcast_to', shape=shape)

    def sum_to(self, shape: Sequence[int]) -> 'Var':
        shape = tuple(int(s) for s in shape)
        if shape == self.shape:
            return self
        return self._apply('sum_to', shape=shape)

    def pad(self, widths: Sequence[Tuple[int, int]]) -> 'Var':
        widths = tuple((int(lo), int(hi)) for lo, hi in widths)
        if all(lo == 0 and hi == 0 for lo, hi in widths) and len(widths) == self.ndim:
            return self
        return self._apply('pad', widths=widths)

    def slice(self, bounds: Sequence[Tuple[int, int]]) -> 'Var':
        bounds = tuple((int(start), int(stop)) for start, stop in bounds)
        if len(bounds) == self.ndim and all(b == (0, s) for b, s in zip(bounds, self.shape)):
            return self
        return self._apply('slice', bounds=bounds)

    def conv2d(self, weight: 'Var', stride: int = 1, padding: int = 0) -> 'Var':
        return self._apply('conv2d', self._lift(weight), stride=int(stride), padding=int(padding))


def eval_graph(graph: Graph, leaf_values: Mapping[Any, Any], targets: Sequence[NodeRef]) -> List[np.ndarray]:
    """Functional form of :meth:`Graph.eval`."""
    return graph.eval(leaf_values, targets)


def grad(graph: Graph, output: NodeRef, wrt: Sequence[NodeRef], allow_unreachable: bool = False) -> List[int]:
    """Functional form of :meth:`Graph.grad`."""
    return graph.grad(output, wrt, allow_unreachable=allow_unreachable)


def gradients(output: Var, wrt: Sequence[Var], allow_unreachable: bool = False) -> List[Var]:
    """Like :func:`grad` but takes and returns Vars."""
    ids = output.graph.grad(output, wrt, allow_unreachable=allow_unreachable)
    return [Var(output.graph, i) for i in ids]
