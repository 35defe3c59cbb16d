"""Classification loss."""
from typing import Sequence

import numpy as np

from gia_lab.autodiff import Var
from gia_lab.core.exceptions import ShapeError


def one_hot(labels: Sequence[int], num_classes: int) -> np.ndarray:
    labels = [int(y) for y in labels]
    for y in labels:
        if not 0 <= y < num_classes:
            raise ShapeError(f"Label {y} out of range for {num_classes} classes")
    encoded = np.zeros((len(labels), num_classes))
    encoded[np.arange(len(labels)), labels] = 1.0
    return encoded


def softmax_cross_entropy(logits: Var, targets: Var) -> Var:
    """Mean cross-entropy against one-hot ``targets`` (a B x K node)."""
    if logits.ndim != 2 or logits.shape != targets.shape:
        raise ShapeError(f"Logits {logits.shape} and targets {targets.shape} must both be B x K")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - shifted.exp().sum(axis=1, keepdims=True).log()
    return -(log_probs * targets).sum() * (1.0 / logits.shape[0])


def cross_entropy(logits: Var, labels: Sequence[int]) -> Var:
    """Mean softmax cross-entropy of integer labels."""
    if logits.ndim != 2 or len(labels) != logits.shape[0]:
        raise ShapeError(f"{len(labels)} labels for logits of shape {logits.shape}")
    return softmax_cross_entropy(logits, logits.graph.constant(one_hot(labels, logits.shape[1])))
