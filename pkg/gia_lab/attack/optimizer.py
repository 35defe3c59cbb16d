"""Adam on numpy arrays."""
from typing import Optional

import numpy as np


class Adam:
    """Adam with bias correction; only the learning rate is meant to change."""

    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self._m: Optional[np.ndarray] = None
        self._v: Optional[np.ndarray] = None

    def step(self, x: np.ndarray, grad: np.ndarray) -> np.ndarray:
        """Return the updated point; ``x`` is not modified."""
        if self._m is None:
            self._m = np.zeros_like(x)
            self._v = np.zeros_like(x)
        self.t += 1
        self._m = self.beta1 * self._m + (1.0 - self.beta1) * grad
        self._v = self.beta2 * self._v + (1.0 - self.beta2) * grad * grad
        m_hat = self._m / (1.0 - self.beta1 ** self.t)
        v_hat = self._v / (1.0 - self.beta2 ** self.t)
        return x - self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


def decayed_learning_rate(base: float, iteration: int, iterations: int) -> float:
    """x0.1 at each of 3/8, 5/8 and 7/8 of the run."""
    milestones = (3 * iterations // 8, 5 * iterations // 8, 7 * iterations // 8)
    return base * 0.1 ** sum(iteration >= m for m in milestones)
