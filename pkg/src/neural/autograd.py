"""Reverse-mode differentiation over numpy arrays.

Every operation returns a new `Tensor` holding its inputs in `_prev` and a closure
that pushes the output gradient back into them. `backward()` runs the closures in
reverse topological order.
"""

from typing import Callable, Optional

import numpy as np

from errors import ContractViolationError


def unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sums a broadcast gradient back down to `shape`."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, size in enumerate(shape) if size == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


def _lift(value) -> "Tensor":
    return value if isinstance(value, Tensor) else Tensor(value)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_prev", "_backward", "_op")

    def __init__(self, data, _children: tuple = (), _op: str = "", requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad or any(c.requires_grad for c in _children)
        self._prev = _children if self.requires_grad else ()
        self._backward: Callable[[], None] = lambda: None
        self._op = _op

    # Introspection
    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def item(self) -> float:
        return float(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op or 'leaf'})"

    def _accumulate(self, grad: np.ndarray) -> None:
        if not self.requires_grad:
            return
        grad = unbroadcast(grad, self.data.shape)
        if self.grad is None:
            self.grad = grad.copy()
        else:
            self.grad += grad

    def _node(self, data, children: tuple, op: str) -> "Tensor":
        return Tensor(data, children, op)

    # Elementwise arithmetic
    def __add__(self, other):
        other = _lift(other)
        out = self._node(self.data + other.data, (self, other), "+")

        def _backward():
            self._accumulate(out.grad)
            other._accumulate(out.grad)

        out._backward = _backward
        return out

    def __mul__(self, other):
        other = _lift(other)
        out = self._node(self.data * other.data, (self, other), "*")

        def _backward():
            self._accumulate(out.grad * other.data)
            other._accumulate(out.grad * self.data)

        out._backward = _backward
        return out

    def __truediv__(self, other):
        other = _lift(other)
        out = self._node(self.data / other.data, (self, other), "/")

        def _backward():
            self._accumulate(out.grad / other.data)
            other._accumulate(-out.grad * self.data / (other.data * other.data))

        out._backward = _backward
        return out

    def __pow__(self, exponent: float):
        if isinstance(exponent, Tensor):
            raise TypeError("only constant exponents are supported")
        out = self._node(self.data ** exponent, (self,), f"**{exponent}")

        def _backward():
            self._accumulate(out.grad * exponent * self.data ** (exponent - 1))

        out._backward = _backward
        return out

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-_lift(other))

    def __radd__(self, other):
        return self + other

    def __rsub__(self, other):
        return _lift(other) - self

    def __rmul__(self, other):
        return self * other

    def __rtruediv__(self, other):
        return _lift(other) / self

    def __matmul__(self, other):
        other = _lift(other)
        out = self._node(self.data @ other.data, (self, other), "@")

        def _backward():
            g = out.grad
            a, b = self.data, other.data
            if b.ndim == 1:
                self._accumulate(np.multiply.outer(g, b))
                other._accumulate(np.tensordot(a, g, axes=(tuple(range(a.ndim - 1)), tuple(range(g.ndim)))))
                return
            self._accumulate(g @ np.swapaxes(b, -1, -2))
            other._accumulate(np.swapaxes(a, -1, -2) @ g)

        out._backward = _backward
        return out

    # Reductions
    def sum(self, axis=None, keepdims: bool = False):
        out = self._node(self.data.sum(axis=axis, keepdims=keepdims), (self,), "sum")

        def _backward():
            g = out.grad
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.data.shape))

        out._backward = _backward
        return out

    def mean(self, axis=None, keepdims: bool = False):
        count = self.data.size if axis is None else np.prod([self.data.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(count))

    # Nonlinearities
    def exp(self):
        out = self._node(np.exp(self.data), (self,), "exp")

        def _backward():
            self._accumulate(out.grad * out.data)

        out._backward = _backward
        return out

    def log(self):
        out = self._node(np.log(self.data), (self,), "log")

        def _backward():
            self._accumulate(out.grad / self.data)

        out._backward = _backward
        return out

    def tanh(self):
        out = self._node(np.tanh(self.data), (self,), "tanh")

        def _backward():
            self._accumulate(out.grad * (1.0 - out.data * out.data))

        out._backward = _backward
        return out

    def sigmoid(self):
        out = self._node(0.5 * (np.tanh(0.5 * self.data) + 1.0), (self,), "sigmoid")

        def _backward():
            self._accumulate(out.grad * out.data * (1.0 - out.data))

        out._backward = _backward
        return out

    def relu(self):
        out = self._node(np.maximum(self.data, 0.0), (self,), "relu")

        def _backward():
            self._accumulate(out.grad * (self.data > 0))

        out._backward = _backward
        return out

    # Shape
    def reshape(self, *shape):
        shape = shape[0] if len(shape) == 1 and isinstance(shape[0], tuple) else shape
        out = self._node(self.data.reshape(shape), (self,), "reshape")

        def _backward():
            self._accumulate(out.grad.reshape(self.data.shape))

        out._backward = _backward
        return out

    def transpose(self, *axes):
        axes = axes or tuple(reversed(range(self.ndim)))
        out = self._node(self.data.transpose(axes), (self,), "transpose")
        inverse = np.argsort(axes)

        def _backward():
            self._accumulate(out.grad.transpose(inverse))

        out._backward = _backward
        return out

    def __getitem__(self, index):
        out = self._node(self.data[index], (self,), "getitem")

        def _backward():
            g = np.zeros_like(self.data)
            np.add.at(g, index, out.grad)
            self._accumulate(g)

        out._backward = _backward
        return out

    # Graph traversal
    def backward(self, grad: Optional[np.ndarray] = None) -> None:
        if not self.requires_grad:
            raise ContractViolationError("backward called on a value with no recorded trace")
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for child in node._prev:
                if id(child) not in seen:
                    stack.append((child, False))
        self.grad = np.ones_like(self.data) if grad is None else np.asarray(grad, dtype=np.float64)
        for node in reversed(order):
            if node._prev and node.grad is not None:
                node._backward()


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(p, (x,), "softmax")

    def _backward():
        g = out.grad
        x._accumulate(p * (g - (g * p).sum(axis=axis, keepdims=True)))

    out._backward = _backward
    return out


def masked_log_softmax(x: Tensor, mask: np.ndarray) -> Tensor:
    """Log-probabilities over the last axis; masked-out entries are -inf and get no gradient."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise ContractViolationError("masked softmax over an empty support")
    scores = np.where(mask, x.data, -np.inf)
    top = scores.max(axis=-1, keepdims=True)
    e = np.where(mask, np.exp(scores - top), 0.0)
    total = e.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore"):
        logp = np.where(mask, scores - top - np.log(total), -np.inf)
    p = e / total
    out = Tensor(logp, (x,), "masked_log_softmax")

    def _backward():
        g = np.where(mask, out.grad, 0.0)
        x._accumulate(np.where(mask, g - p * g.sum(axis=-1, keepdims=True), 0.0))

    out._backward = _backward
    return out