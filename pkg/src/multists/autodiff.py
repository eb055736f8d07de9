"""Dense float64 tensors with reverse-mode automatic differentiation.

A Tensor wraps a row-major numpy float64 array. Operations on tensors
record a computation graph (parent links plus a backward closure) as long
as gradient recording is enabled and at least one operand participates in
differentiation. ``backward`` on a scalar result walks the recorded graph
once, in reverse topological order, and accumulates ``grad`` on every
tensor with ``requires_grad`` set. Repeated backward calls accumulate;
``zero_grad`` resets.

Everything is single-threaded and deterministic: identical inputs produce
bitwise-identical forward values and gradients.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np

from .errors import ShapeError

_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block (evaluation mode)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def _as_array(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    return np.ascontiguousarray(arr)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to the operand's shape."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """Multi-dimensional float64 value, optionally tracked for gradients."""

    __slots__ = ("data", "requires_grad", "grad", "_parents", "_backward", "_in_graph")

    def __init__(self, data, requires_grad: bool = False):
        self.data = _as_array(data)
        self.requires_grad = bool(requires_grad)
        self.grad: np.ndarray | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward = None
        self._in_graph = self.requires_grad

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def zero_grad(self):
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data.copy())

    def __repr__(self):
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"

    # -- graph construction -------------------------------------------------

    @staticmethod
    def _result(data: np.ndarray, parents: tuple, backward) -> "Tensor":
        out = Tensor(data)
        if _grad_enabled and any(p._in_graph for p in parents):
            out._parents = parents
            out._backward = backward
            out._in_graph = True
        return out

    # -- elementwise arithmetic (numpy broadcasting) ------------------------

    def __add__(self, other):
        other = _wrap(other)
        a, b = self, other
        data = _broadcast_op(np.add, a, b)

        def backward(g, acc):
            acc(a, _unbroadcast(g, a.shape))
            acc(b, _unbroadcast(g, b.shape))

        return Tensor._result(data, (a, b), backward)

    def __sub__(self, other):
        other = _wrap(other)
        a, b = self, other
        data = _broadcast_op(np.subtract, a, b)

        def backward(g, acc):
            acc(a, _unbroadcast(g, a.shape))
            acc(b, _unbroadcast(-g, b.shape))

        return Tensor._result(data, (a, b), backward)

    def __mul__(self, other):
        other = _wrap(other)
        a, b = self, other
        data = _broadcast_op(np.multiply, a, b)

        def backward(g, acc):
            acc(a, _unbroadcast(g * b.data, a.shape))
            acc(b, _unbroadcast(g * a.data, b.shape))

        return Tensor._result(data, (a, b), backward)

    def __truediv__(self, other):
        other = _wrap(other)
        a, b = self, other
        data = _broadcast_op(np.divide, a, b)

        def backward(g, acc):
            acc(a, _unbroadcast(g / b.data, a.shape))
            acc(b, _unbroadcast(-g * a.data / (b.data * b.data), b.shape))

        return Tensor._result(data, (a, b), backward)

    def __neg__(self):
        a = self

        def backward(g, acc):
            acc(a, -g)

        return Tensor._result(-a.data, (a,), backward)

    def __radd__(self, other):
        return _wrap(other).__add__(self)

    def __rsub__(self, other):
        return _wrap(other).__sub__(self)

    def __rmul__(self, other):
        return _wrap(other).__mul__(self)

    def __rtruediv__(self, other):
        return _wrap(other).__truediv__(self)

    # -- elementwise functions ----------------------------------------------

    def abs(self):
        a = self
        sign = np.sign(a.data)

        def backward(g, acc):
            acc(a, g * sign)

        return Tensor._result(np.abs(a.data), (a,), backward)

    def tanh(self):
        a = self
        out_data = np.tanh(a.data)

        def backward(g, acc):
            acc(a, g * (1.0 - out_data * out_data))

        return Tensor._result(out_data, (a,), backward)

    def relu(self):
        a = self
        mask = a.data > 0

        def backward(g, acc):
            acc(a, g * mask)

        return Tensor._result(np.where(mask, a.data, 0.0), (a,), backward)

    def exp(self):
        a = self
        out_data = np.exp(a.data)

        def backward(g, acc):
            acc(a, g * out_data)

        return Tensor._result(out_data, (a,), backward)

    def log(self):
        a = self

        def backward(g, acc):
            acc(a, g / a.data)

        return Tensor._result(np.log(a.data), (a,), backward)

    def pow(self, exponent: float):
        a = self
        c = float(exponent)

        def backward(g, acc):
            acc(a, g * c * np.power(a.data, c - 1.0))

        return Tensor._result(np.power(a.data, c), (a,), backward)

    def clamp_min(self, floor: float):
        a = self
        mask = a.data >= floor

        def backward(g, acc):
            acc(a, g * mask)

        return Tensor._result(np.maximum(a.data, floor), (a,), backward)

    # -- shape manipulation ---------------------------------------------------

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        a = self
        old = a.shape

        def backward(g, acc):
            acc(a, g.reshape(old))

        return Tensor._result(np.ascontiguousarray(a.data.reshape(shape)), (a,), backward)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        a = self
        inverse = np.argsort(axes)

        def backward(g, acc):
            acc(a, np.ascontiguousarray(g.transpose(inverse)))

        return Tensor._result(np.ascontiguousarray(a.data.transpose(axes)), (a,), backward)

    def swapaxes(self, i: int, j: int):
        axes = list(range(self.ndim))
        axes[i], axes[j] = axes[j], axes[i]
        return self.transpose(tuple(axes))

    # -- reductions -------------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        a = self

        def backward(g, acc):
            if axis is None:
                acc(a, np.broadcast_to(g, a.shape).copy())
            else:
                ge = g if keepdims else np.expand_dims(g, axis)
                acc(a, np.broadcast_to(ge, a.shape).copy())

        return Tensor._result(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward)

    def mean(self, axis=None, keepdims: bool = False):
        n = self.size if axis is None else self.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def max(self, axis: int, keepdims: bool = False):
        a = self
        out_data = a.data.max(axis=axis, keepdims=True)
        # Subgradient: route to the first position attaining the max.
        hit = a.data == out_data
        first = hit.cumsum(axis=axis) == 1
        mask = hit & first

        def backward(g, acc):
            ge = g if keepdims else np.expand_dims(g, axis)
            acc(a, mask * ge)

        result = out_data if keepdims else out_data.squeeze(axis=axis)
        return Tensor._result(result, (a,), backward)

    # -- linear algebra -----------------------------------------------------------

    def matmul(self, other):
        other = _wrap(other)
        a, b = self, other
        if a.ndim < 2 or b.ndim < 2:
            raise ShapeError(f"matmul requires >=2-d operands, got {a.shape} @ {b.shape}")
        if a.shape[-1] != b.shape[-2]:
            raise ShapeError(f"matmul inner dimensions disagree: {a.shape} @ {b.shape}")
        try:
            data = np.matmul(a.data, b.data)
        except ValueError as exc:
            raise ShapeError(f"matmul batch dimensions disagree: {a.shape} @ {b.shape}") from exc

        def backward(g, acc):
            ga = np.matmul(g, b.data.swapaxes(-1, -2))
            gb = np.matmul(a.data.swapaxes(-1, -2), g)
            acc(a, _unbroadcast(ga, a.shape))
            acc(b, _unbroadcast(gb, b.shape))

        return Tensor._result(data, (a, b), backward)

    def __matmul__(self, other):
        return self.matmul(other)

    # -- indexing -----------------------------------------------------------------

    def gather_rows(self, ids):
        """Select rows by integer index (embedding lookup).

        ``ids`` may have any shape; the result has shape
        ``ids.shape + self.shape[1:]``. The backward pass scatter-adds.
        """
        a = self
        idx = np.asarray(ids, dtype=np.int64)
        if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
            raise ShapeError(f"row index out of range for table with {a.shape[0]} rows")

        def backward(g, acc):
            gt = np.zeros_like(a.data)
            np.add.at(gt, idx, g)
            acc(a, gt)

        return Tensor._result(a.data[idx], (a,), backward)

    def pick(self, ids):
        """Pick one entry along the last axis per leading position."""
        a = self
        idx = np.asarray(ids, dtype=np.int64)
        if idx.shape != a.shape[:-1]:
            raise ShapeError(f"pick ids shape {idx.shape} does not match {a.shape[:-1]}")
        expanded = np.expand_dims(idx, -1)
        data = np.take_along_axis(a.data, expanded, axis=-1).squeeze(-1)

        def backward(g, acc):
            gt = np.zeros_like(a.data)
            np.put_along_axis(gt, expanded, np.expand_dims(g, -1), axis=-1)
            acc(a, gt)

        return Tensor._result(data, (a,), backward)

    # -- softmax family -------------------------------------------------------------

    def softmax(self, axis: int = -1):
        a = self
        if a.shape[axis] == 0:
            raise ShapeError("softmax over an empty axis")
        shifted = a.data - a.data.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        out_data = e / e.sum(axis=axis, keepdims=True)

        def backward(g, acc):
            inner = (g * out_data).sum(axis=axis, keepdims=True)
            acc(a, out_data * (g - inner))

        return Tensor._result(out_data, (a,), backward)

    def log_softmax(self, axis: int = -1):
        a = self
        if a.shape[axis] == 0:
            raise ShapeError("log_softmax over an empty axis")
        shifted = a.data - a.data.max(axis=axis, keepdims=True)
        log_z = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
        out_data = shifted - log_z

        def backward(g, acc):
            acc(a, g - np.exp(out_data) * g.sum(axis=axis, keepdims=True))

        return Tensor._result(out_data, (a,), backward)

    # -- stochastic ------------------------------------------------------------------

    def dropout(self, p: float, rng: np.random.Generator):
        """Inverted dropout; identity when p == 0."""
        if p == 0.0:
            return self
        a = self
        keep = rng.random(a.shape) >= p
        scale = keep / (1.0 - p)

        def backward(g, acc):
            acc(a, g * scale)

        return Tensor._result(a.data * scale, (a,), backward)

    # -- backward -------------------------------------------------------------------

    def backward(self):
        """Populate ``grad`` on every requires_grad tensor in the graph.

        The result must be a scalar. Visits each recorded node exactly once
        in reverse topological order; gradients accumulate across calls.
        """
        if self.data.size != 1:
            raise ShapeError(f"backward requires a scalar loss, got shape {self.shape}")
        order = topological_order(self)
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}

        def acc(t: Tensor, g: np.ndarray):
            if not t._in_graph:
                return
            key = id(t)
            if key in grads:
                grads[key] = grads[key] + g
            else:
                grads[key] = g

        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.requires_grad:
                if node.grad is None:
                    node.grad = np.zeros_like(node.data)
                node.grad += g
            if node._backward is not None:
                node._backward(g, acc)


def topological_order(root: Tensor) -> list[Tensor]:
    """Recorded graph nodes ordered so every node's inputs precede it."""
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def _wrap(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def _broadcast_op(fn, a: Tensor, b: Tensor) -> np.ndarray:
    try:
        return fn(a.data, b.data)
    except ValueError as exc:
        raise ShapeError(f"operands not broadcastable: {a.shape} vs {b.shape}") from exc


def concat(tensors, axis: int = 0) -> Tensor:
    """Concatenate along an axis, splitting the gradient back apart."""
    parts = [_wrap(t) for t in tensors]
    if not parts:
        raise ShapeError("concat of an empty sequence")
    data = np.concatenate([p.data for p in parts], axis=axis)
    sizes = [p.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def backward(g, acc):
        for part, start, stop in zip(parts, offsets[:-1], offsets[1:]):
            index = [slice(None)] * g.ndim
            index[axis] = slice(start, stop)
            acc(part, np.ascontiguousarray(g[tuple(index)]))

    return Tensor._result(data, tuple(parts), backward)


def stack_rows(tensors) -> Tensor:
    """Stack equal-shape 1-d tensors into a matrix."""
    return concat([t.reshape(1, *t.shape) for t in tensors], axis=0)
