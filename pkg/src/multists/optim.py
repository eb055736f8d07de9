"""Adam optimizer with bias correction over named parameter tensors."""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor
from .errors import TrainingError


class Adam:
    """Bias-corrected Adam over a list of (name, tensor) parameters.

    Defaults follow common transformer practice: beta1=0.9, beta2=0.98,
    epsilon=1e-9. The learning-rate default is 3e-4.
    """

    def __init__(self, params, learning_rate: float = 3e-4,
                 beta1: float = 0.9, beta2: float = 0.98, epsilon: float = 1e-9):
        if learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.params: list[tuple[str, Tensor]] = [(name, p) for name, p in params]
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.step_count = 0
        self.first_moment = [np.zeros_like(p.data) for _, p in self.params]
        self.second_moment = [np.zeros_like(p.data) for _, p in self.params]

    def zero_grad(self):
        for _, p in self.params:
            p.zero_grad()

    def step(self):
        """Apply one update; parameters without a gradient are untouched."""
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for i, (name, p) in enumerate(self.params):
            g = p.grad
            if g is None:
                continue
            if not np.isfinite(g).all():
                raise TrainingError(f"non-finite gradient for parameter '{name}'")
            m = self.first_moment[i]
            v = self.second_moment[i]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            m_hat = m / bc1
            v_hat = v / bc2
            p.data -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)
