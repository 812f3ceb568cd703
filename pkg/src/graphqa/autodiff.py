"""Minimal reverse-mode automatic differentiation over numpy arrays.

Every operation builds a node in a computation tape; backward() walks the
tape in reverse topological order accumulating exact gradients. Only the
operations the graph network needs are provided: elementwise arithmetic
with broadcasting, matmul, relu, exp, log, sum, clip, row gather, and
segment scatter-add. All data is float64; gradients match finite
differences to machine-level precision, which the gradient-check harness
relies on.
"""

from __future__ import annotations

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum grad down to the given operand shape, undoing numpy broadcast."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    def __init__(self, data, parents=(), backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)
        self._parents = parents
        self._backward = backward

    @property
    def shape(self):
        return self.data.shape

    def zero_grad(self):
        self.grad[...] = 0.0

    def _wrap(self, other) -> "Tensor":
        return other if isinstance(other, Tensor) else Tensor(other)

    def __add__(self, other):
        other = self._wrap(other)
        out = Tensor(self.data + other.data, (self, other))

        def backward():
            self.grad += _unbroadcast(out.grad, self.data.shape)
            other.grad += _unbroadcast(out.grad, other.data.shape)
        out._backward = backward
        return out

    def __mul__(self, other):
        other = self._wrap(other)
        out = Tensor(self.data * other.data, (self, other))

        def backward():
            self.grad += _unbroadcast(out.grad * other.data, self.data.shape)
            other.grad += _unbroadcast(out.grad * self.data, other.data.shape)
        out._backward = backward
        return out

    def __sub__(self, other):
        return self + (self._wrap(other) * -1.0)

    def __truediv__(self, other):
        other = self._wrap(other)
        out = Tensor(self.data / other.data, (self, other))

        def backward():
            self.grad += _unbroadcast(out.grad / other.data, self.data.shape)
            other.grad += _unbroadcast(
                -out.grad * self.data / (other.data * other.data), other.data.shape)
        out._backward = backward
        return out

    def __neg__(self):
        return self * -1.0

    def __radd__(self, other):
        return self + other

    def __rmul__(self, other):
        return self * other

    def __rsub__(self, other):
        return self._wrap(other) - self

    def __matmul__(self, other):
        other = self._wrap(other)
        a, b = self.data, other.data
        if a.ndim != 2 or b.ndim not in (1, 2):
            raise ValueError(f"matmul supports (2d @ 2d) and (2d @ 1d), got {a.shape} @ {b.shape}")
        out = Tensor(a @ b, (self, other))

        def backward():
            if b.ndim == 2:
                self.grad += out.grad @ b.T
                other.grad += a.T @ out.grad
            else:
                self.grad += np.outer(out.grad, b)
                other.grad += a.T @ out.grad
        out._backward = backward
        return out

    def relu(self):
        out = Tensor(np.maximum(self.data, 0.0), (self,))

        def backward():
            self.grad += out.grad * (self.data > 0.0)
        out._backward = backward
        return out

    def exp(self):
        out = Tensor(np.exp(self.data), (self,))

        def backward():
            self.grad += out.grad * out.data
        out._backward = backward
        return out

    def log(self):
        out = Tensor(np.log(self.data), (self,))

        def backward():
            self.grad += out.grad / self.data
        out._backward = backward
        return out

    def sum(self, axis=None):
        out = Tensor(self.data.sum(axis=axis), (self,))

        def backward():
            if axis is None:
                self.grad += out.grad
            else:
                self.grad += np.expand_dims(out.grad, axis)
        out._backward = backward
        return out

    def mean(self, axis=None):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis) * (1.0 / n)

    def clip(self, lo: float, hi: float):
        """Clamp values; gradient passes only where the clamp is inactive."""
        out = Tensor(np.clip(self.data, lo, hi), (self,))

        def backward():
            self.grad += out.grad * ((self.data >= lo) & (self.data <= hi))
        out._backward = backward
        return out

    def reshape(self, *shape):
        out = Tensor(self.data.reshape(shape), (self,))

        def backward():
            self.grad += out.grad.reshape(self.data.shape)
        out._backward = backward
        return out

    def take(self, indices):
        """Rows along axis 0; repeated indices accumulate gradient."""
        indices = np.asarray(indices, dtype=np.int64)
        out = Tensor(self.data[indices], (self,))

        def backward():
            np.add.at(self.grad, indices, out.grad)
        out._backward = backward
        return out

    def segment_sum(self, segment_ids, num_segments: int):
        """out[s] = sum of rows whose segment id is s (scatter-add)."""
        segment_ids = np.asarray(segment_ids, dtype=np.int64)
        shape = (num_segments,) + self.data.shape[1:]
        acc = np.zeros(shape, dtype=np.float64)
        np.add.at(acc, segment_ids, self.data)
        out = Tensor(acc, (self,))

        def backward():
            self.grad += out.grad[segment_ids]
        out._backward = backward
        return out

    def backward(self):
        if self.data.size != 1:
            raise ValueError("backward() needs a scalar output")
        topo: list[Tensor] = []
        visited: set[int] = set()

        def build(node: Tensor):
            if id(node) not in visited:
                visited.add(id(node))
                for parent in node._parents:
                    build(parent)
                topo.append(node)
        build(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(topo):
            if node._backward is not None:
                node._backward()


def softmax(logits: Tensor) -> Tensor:
    """Softmax over a 1-d tensor, max-shifted for stability.

    The shift is a constant w.r.t. the inputs, so gradients stay exact.
    """
    shifted = logits - float(logits.data.max())
    e = shifted.exp()
    return e / e.sum()


def segment_softmax(logits: Tensor, segment_ids, num_segments: int) -> Tensor:
    """Independent softmax inside each segment of a 1-d logit tensor.

    Used for neighborhood attention: entry i is normalized against all
    entries sharing segment_ids[i]. Per-segment max-shift keeps exp in
    range without touching the gradient.
    """
    segment_ids = np.asarray(segment_ids, dtype=np.int64)
    maxes = np.full(num_segments, -np.inf)
    np.maximum.at(maxes, segment_ids, logits.data)
    e = (logits - Tensor(maxes[segment_ids])).exp()
    denom = e.segment_sum(segment_ids, num_segments)
    return e / denom.take(segment_ids)
