"""Dense float64 tensors with differentiable reverse-mode differentiation."""
from .graph import Graph, LeafKind, Node, Var, eval_graph, grad, gradients
from .primitives import PRIMITIVES, Primitive, register_primitive
from .checks import check_gradient, check_second_order, evaluate

__all__ = [
    'Graph', 'LeafKind', 'Node', 'Var', 'eval_graph', 'grad', 'gradients',
    'PRIMITIVES', 'Primitive', 'register_primitive',
    'check_gradient', 'check_second_order', 'evaluate',
]
