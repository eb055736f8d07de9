"""Central finite-difference gradient checking at float64.

The numeric side evaluates the forward function only (under no_grad), so
it stays independent of the backward rules it is used to verify.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, no_grad


def numeric_gradient(fn, inputs: list[Tensor], step: float = 1e-6) -> list[np.ndarray]:
    """Central-difference d fn / d input for each input, element by element.

    ``fn`` must map the given tensors to a scalar Tensor and must not keep
    state between calls.
    """
    grads = []
    with no_grad():
        for x in inputs:
            g = np.zeros_like(x.data)
            flat = x.data.reshape(-1)
            gflat = g.reshape(-1)
            for i in range(flat.size):
                keep = flat[i]
                flat[i] = keep + step
                up = fn(*inputs).item()
                flat[i] = keep - step
                down = fn(*inputs).item()
                flat[i] = keep
                gflat[i] = (up - down) / (2.0 * step)
            grads.append(g)
    return grads


def max_relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """max |a - n| / max(1, |a|, |n|), elementwise."""
    denom = np.maximum(1.0, np.maximum(np.abs(analytic), np.abs(numeric)))
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_gradients(fn, inputs: list[Tensor], step: float = 1e-6) -> float:
    """Run backward once and compare against central differences.

    Returns the worst relative error over all inputs.
    """
    for x in inputs:
        x.requires_grad = True
        x._in_graph = True
        x.zero_grad()
    loss = fn(*inputs)
    loss.backward()
    numeric = numeric_gradient(fn, inputs, step=step)
    worst = 0.0
    for x, n in zip(inputs, numeric):
        analytic = x.grad if x.grad is not None else np.zeros_like(x.data)
        worst = max(worst, max_relative_error(analytic, n))
    return worst
