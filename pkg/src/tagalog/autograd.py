"""A small reverse-mode automatic differentiation engine over numpy arrays.

Each :class:`Tensor` records the tensors it was computed from together with
a closure that pushes its gradient back to them. :meth:`Tensor.backward`
walks that record in reverse topological order. Only float64 is used.
"""
from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "name", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None,
                 _parents: tuple = (), _backward: Callable | None = None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self.name = name
        self._parents = _parents
        self._backward = _backward

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    def backward(self, grad: np.ndarray | None = None) -> None:
        if grad is None:
            if self.data.size != 1:
                raise ValueError("backward() without a seed needs a scalar tensor")
            grad = np.ones_like(self.data)
        order = _topological(self)
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=np.float64)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node._accumulate(g)
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, index):
        return take(self, index)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    @property
    def T(self):
        return transpose(self)


def _topological(root: Tensor) -> list[Tensor]:
    order, seen = [], set()
    stack = [(root, False)]
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
            if parent.requires_grad and id(parent) not in seen:
                stack.append((parent, False))
    return order


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents: Sequence[Tensor], backward: Callable) -> Tensor:
    parents = tuple(parents)
    if any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, _parents=parents, _backward=backward)
    return Tensor(data)


def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data + b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)))


def sub(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data - b.data, (a, b),
                 lambda g: (_unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)))


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data * b.data, (a, b),
                 lambda g: (_unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)))


def div(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    out = a.data / b.data

    def backward(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * out / b.data, b.shape))

    return _make(out, (a, b), backward)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2:
        raise ValueError("matmul operands must be at least 2-D; reshape vectors first")

    def backward(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _make(a.data @ b.data, (a, b), backward)


def tanh(x) -> Tensor:
    x = as_tensor(x)
    out = np.tanh(x.data)
    return _make(out, (x,), lambda g: (g * (1.0 - out * out),))


def sigmoid(x) -> Tensor:
    x = as_tensor(x)
    out = _sigmoid(x.data)
    return _make(out, (x,), lambda g: (g * out * (1.0 - out),))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # split by sign so exp never overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def exp(x) -> Tensor:
    x = as_tensor(x)
    out = np.exp(x.data)
    return _make(out, (x,), lambda g: (g * out,))


def log(x) -> Tensor:
    x = as_tensor(x)
    return _make(np.log(x.data), (x,), lambda g: (g / x.data,))


def sqrt(x) -> Tensor:
    x = as_tensor(x)
    out = np.sqrt(x.data)
    return _make(out, (x,), lambda g: (g * 0.5 / out,))


def square(x) -> Tensor:
    x = as_tensor(x)
    return _make(x.data * x.data, (x,), lambda g: (2.0 * g * x.data,))


def clamp_min(x, floor: float) -> Tensor:
    """max(x, floor); the gradient is blocked where the floor is active."""
    x = as_tensor(x)
    keep = x.data > floor
    return _make(np.where(keep, x.data, floor), (x,), lambda g: (g * keep,))


def tsum(x, axis=None, keepdims=False) -> Tensor:
    x = as_tensor(x)
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def backward(g):
        g = np.asarray(g)
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, x.shape).copy(),)

    return _make(out, (x,), backward)


def tmean(x, axis=None, keepdims=False) -> Tensor:
    x = as_tensor(x)
    if axis is None:
        n = x.data.size
    else:
        axes = (axis,) if isinstance(axis, int) else axis
        n = int(np.prod([x.shape[a] for a in axes]))
    return tsum(x, axis=axis, keepdims=keepdims) / float(n)


def reshape(x, shape) -> Tensor:
    x = as_tensor(x)
    return _make(x.data.reshape(shape), (x,), lambda g: (g.reshape(x.shape),))


def transpose(x, axes=None) -> Tensor:
    x = as_tensor(x)
    out = np.transpose(x.data, axes)
    inverse = None if axes is None else np.argsort(axes)
    return _make(out, (x,), lambda g: (np.transpose(g, inverse),))


def take(x, index) -> Tensor:
    """Basic or fancy indexing; repeated indices accumulate in backward."""
    x = as_tensor(x)

    def backward(g):
        full = np.zeros_like(x.data)
        np.add.at(full, index, g)
        return (full,)

    return _make(x.data[index], (x,), backward)


def concat(tensors: Iterable, axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out = np.concatenate([t.data for t in tensors], axis=axis)
    bounds = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, bounds, axis=axis))

    return _make(out, tensors, backward)


def masked_softmax(logits, mask: np.ndarray | None = None, axis: int = -1) -> Tensor:
    """Softmax along ``axis`` treating ``mask == False`` entries as -inf logits.

    Masked entries come out exactly 0 and receive zero gradient. Raises
    ``ValueError`` when a slice has no unmasked entry.
    """
    logits = as_tensor(logits)
    z = logits.data
    if mask is None:
        mask = np.ones(z.shape, dtype=bool)
    else:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), z.shape)
        if not mask.any(axis=axis).all():
            raise ValueError("masked_softmax: every position in a slice is masked")
    shifted = np.where(mask, z, -np.inf)
    shifted = shifted - shifted.max(axis=axis, keepdims=True)
    e = np.where(mask, np.exp(shifted), 0.0)
    p = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        inner = (g * p).sum(axis=axis, keepdims=True)
        return (p * (g - inner),)

    return _make(p, (logits,), backward)


def softmax(logits, axis: int = -1) -> Tensor:
    return masked_softmax(logits, None, axis=axis)


def l2_normalize(x, axis: int = -1, eps: float = 1e-12) -> Tensor:
    norm = sqrt(tsum(square(x), axis=axis, keepdims=True) + eps)
    return div(x, norm)
