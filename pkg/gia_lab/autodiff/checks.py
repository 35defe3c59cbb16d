"""Finite-difference verification of graph gradients."""
from typing import Any, Callable, Mapping, Optional

import numpy as np

from gia_lab.autodiff.graph import Graph, NodeRef, Var
from gia_lab.core.exceptions import GraphError, NonFiniteError, PreconditionError


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - numeric) / np.maximum(1.0, np.abs(analytic))))


def _finite_difference(graph: Graph, output: int, leaf: int, point: np.ndarray, step: float,
                       bindings: Mapping[Any, Any]) -> np.ndarray:
    numeric = np.zeros_like(point)
    probe = point.copy()
    for index in np.ndindex(point.shape):
        original = probe[index]
        probe[index] = original + step
        f_plus = graph.eval({**bindings, leaf: probe}, [output])[0]
        probe[index] = original - step
        f_minus = graph.eval({**bindings, leaf: probe}, [output])[0]
        probe[index] = original
        numeric[index] = (float(f_plus) - float(f_minus)) / (2.0 * step)
    return numeric


def check_gradient(graph: Graph, output: NodeRef, leaf: NodeRef, point, step: float = 1e-5,
                   bindings: Optional[Mapping[Any, Any]] = None) -> float:
    """
    Compare grad(output, leaf) with central differences at ``point``.

    Args:
        graph: Graph holding a scalar ``output``
        output: Scalar node
        leaf: Leaf being probed
        point: Value of the leaf
        step: Finite-difference step, > 0
        bindings: Values for the other leaves of the graph

    Returns:
        max over coordinates of |analytic - numeric| / max(1, |analytic|)
    """
    if step <= 0:
        raise PreconditionError(f"step must be positive, got {step}")
    output_id = graph.node(output).id
    leaf_id = graph.node(leaf).id
    if not graph.node(leaf_id).is_leaf:
        raise GraphError(f"Node {leaf_id} is not a leaf")
    point = np.array(point, dtype=np.float64)
    bindings = {graph.node(k).id: v for k, v in (bindings or {}).items()}

    (grad_id,) = graph.grad(output_id, [leaf_id])
    try:
        analytic = graph.eval({**bindings, leaf_id: point}, [grad_id])[0]
        numeric = _finite_difference(graph, output_id, leaf_id, point, step, bindings)
    except NonFiniteError as e:
        raise NonFiniteError(f"Non-finite probe during gradient check: {e}", e.node_id, e.op) from e
    return _relative_error(analytic, numeric)


def check_second_order(graph: Graph, output: NodeRef, leaf: NodeRef, point, step: float = 1e-5,
                       bindings: Optional[Mapping[Any, Any]] = None, seed: int = 0) -> float:
    """
    Check the derivative of the first-order gradient.

    Builds s(x) = <grad f(x), v> for a fixed random direction v and compares
    grad s (a second-order graph) against central differences of s.
    """
    output_id = graph.node(output).id
    leaf_id = graph.node(leaf).id
    (grad_id,) = graph.grad(output_id, [leaf_id])
    direction = np.random.default_rng(seed).standard_normal(graph.node(leaf_id).shape)
    projected = (graph.var(grad_id) * direction).sum()
    return check_gradient(graph, projected, leaf_id, point, step, bindings)


def evaluate(fn: Callable[..., Var], *arrays) -> np.ndarray:
    """Evaluate ``fn`` applied to leaves holding ``arrays`` on a throwaway graph."""
    graph = Graph()
    arrays = [np.asarray(a, dtype=np.float64) for a in arrays]
    leaves = [graph.leaf(f"arg{i}", a.shape) for i, a in enumerate(arrays)]
    result = fn(*leaves)
    return graph.eval({leaf: a for leaf, a in zip(leaves, arrays)}, [result])[0]
