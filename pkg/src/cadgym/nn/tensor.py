"""Reverse-mode automatic differentiation over dense numpy arrays.

Every operation records its parents and a closure that maps the output
gradient to parent gradients; ``backward`` on a scalar walks the graph
in reverse topological order.  Broadcasting follows numpy; gradients are
summed back over broadcast axes.
"""

from __future__ import annotations

import numpy as np

from ..errors import ShapeMismatch

_default_dtype = np.float64


def set_default_dtype(dtype):
    global _default_dtype
    if dtype not in (np.float32, np.float64):
        raise ValueError("dtype must be numpy float32 or float64")
    _default_dtype = dtype


def get_default_dtype():
    return _default_dtype


def _unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` (the inverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, parents=(), backward=None,
                 name=None):
        if isinstance(data, Tensor):
            data = data.data
        self.data = np.asarray(data, dtype=_default_dtype)
        self.grad = None
        self.requires_grad = requires_grad or any(
            p.requires_grad for p in parents)
        self._parents = parents
        self._backward = backward
        self.name = name

    # -- bookkeeping -------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def _accumulate(self, g):
        if self.grad is None:
            self.grad = np.array(g, dtype=self.data.dtype, copy=True)
        else:
            self.grad = self.grad + g

    def backward(self, grad=None):
        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatch("backward() without gradient needs a scalar")
            grad = np.ones_like(self.data)
        order = []
        seen = set()

        def visit(t):
            if id(t) in seen:
                return
            seen.add(id(t))
            for p in t._parents:
                visit(p)
            order.append(t)

        visit(self)
        self._accumulate(np.asarray(grad, dtype=self.data.dtype))
        for t in reversed(order):
            if t._backward is None or t.grad is None:
                continue
            for parent, g in zip(t._parents, t._backward(t.grad)):
                if parent.requires_grad and g is not None:
                    parent._accumulate(g)
        # free the graph for intermediates
        for t in order:
            if t is not self and not t.requires_grad:
                t.grad = None

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        a, b = self, other
        return Tensor(a.data + b.data, parents=(a, b),
                      backward=lambda g: (_unbroadcast(g, a.shape),
                                          _unbroadcast(g, b.shape)))

    __radd__ = __add__

    def __neg__(self):
        return Tensor(-self.data, parents=(self,), backward=lambda g: (-g,))

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        a, b = self, other
        return Tensor(a.data * b.data, parents=(a, b),
                      backward=lambda g: (_unbroadcast(g * b.data, a.shape),
                                          _unbroadcast(g * a.data, b.shape)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        a, b = self, other
        return Tensor(a.data / b.data, parents=(a, b),
                      backward=lambda g: (
                          _unbroadcast(g / b.data, a.shape),
                          _unbroadcast(-g * a.data / (b.data**2), b.shape)))

    def __rtruediv__(self, other):
        return as_tensor(other) / self

    def __pow__(self, k):
        if not np.isscalar(k):
            raise TypeError("only scalar exponents are supported")
        a = self
        return Tensor(a.data**k, parents=(a,),
                      backward=lambda g: (g * k * a.data**(k - 1),))

    def __matmul__(self, other):
        other = as_tensor(other)
        a, b = self, other
        if a.data.ndim < 2 or b.data.ndim < 2:
            raise ShapeMismatch("matmul operands must be at least 2-D")

        def bw(g):
            ga = g @ np.swapaxes(b.data, -1, -2)
            gb = np.swapaxes(a.data, -1, -2) @ g
            return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

        return Tensor(a.data @ b.data, parents=(a, b), backward=bw)

    def __getitem__(self, key):
        a = self

        def bw(g):
            out = np.zeros_like(a.data)
            np.add.at(out, key, g)
            return (out,)

        return Tensor(a.data[key], parents=(a,), backward=bw)

    # -- shaping -----------------------------------------------------------

    def reshape(self, *shape):
        a = self
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Tensor(a.data.reshape(shape), parents=(a,),
                      backward=lambda g: (g.reshape(a.shape),))

    def transpose(self, *axes):
        a = self
        if not axes:
            axes = tuple(reversed(range(a.ndim)))
        inv = np.argsort(axes)
        return Tensor(a.data.transpose(axes), parents=(a,),
                      backward=lambda g: (g.transpose(inv),))

    # -- reductions / nonlinearities ---------------------------------------

    def sum(self, axis=None, keepdims=False):
        a = self

        def bw(g):
            if axis is None:
                return (np.broadcast_to(g, a.shape).copy(),)
            gg = g if keepdims else np.expand_dims(g, axis)
            return (np.broadcast_to(gg, a.shape).copy(),)

        return Tensor(a.data.sum(axis=axis, keepdims=keepdims), parents=(a,),
                      backward=bw)

    def mean(self, axis=None, keepdims=False):
        n = self.data.size if axis is None else self.data.shape[axis]
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def relu(self):
        a = self
        mask = a.data > 0
        return Tensor(a.data * mask, parents=(a,),
                      backward=lambda g: (g * mask,))

    def exp(self):
        a = self
        out = np.exp(a.data)
        return Tensor(out, parents=(a,), backward=lambda g: (g * out,))

    def log(self):
        a = self
        return Tensor(np.log(a.data), parents=(a,),
                      backward=lambda g: (g / a.data,))

    def sqrt(self):
        a = self
        out = np.sqrt(a.data)
        return Tensor(out, parents=(a,),
                      backward=lambda g: (g * 0.5 / out,))

    def maximum(self, other):
        other = as_tensor(other)
        a, b = self, other
        take_a = a.data >= b.data
        return Tensor(np.maximum(a.data, b.data), parents=(a, b),
                      backward=lambda g: (_unbroadcast(g * take_a, a.shape),
                                          _unbroadcast(g * ~take_a, b.shape)))

    def minimum(self, other):
        other = as_tensor(other)
        a, b = self, other
        take_a = a.data <= b.data
        return Tensor(np.minimum(a.data, b.data), parents=(a, b),
                      backward=lambda g: (_unbroadcast(g * take_a, a.shape),
                                          _unbroadcast(g * ~take_a, b.shape)))

    def clip(self, lo, hi):
        return self.maximum(lo).minimum(hi)

    def __repr__(self):
        return f"Tensor(shape={self.shape}, grad={'yes' if self.requires_grad else 'no'})"


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def concat(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.data.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(np.split(g, splits, axis=axis))

    return Tensor(np.concatenate([t.data for t in tensors], axis=axis),
                  parents=tuple(tensors), backward=bw)


def stack(tensors, axis=0):
    tensors = [as_tensor(t) for t in tensors]

    def bw(g):
        return tuple(np.moveaxis(g, axis, 0))

    return Tensor(np.stack([t.data for t in tensors], axis=axis),
                  parents=tuple(tensors), backward=bw)


def log_softmax(x, axis=-1):
    """Numerically stable log-softmax (constant max shift)."""
    x = as_tensor(x)
    shift = Tensor(x.data.max(axis=axis, keepdims=True))
    z = x - shift
    return z - z.exp().sum(axis=axis, keepdims=True).log()


def softmax(x, axis=-1):
    return log_softmax(x, axis=axis).exp()


def dropout(x, p, rng, training):
    if not training or p <= 0.0:
        return x
    keep = (rng.random(x.shape) >= p).astype(x.data.dtype) / (1.0 - p)
    return x * Tensor(keep)


def gather_rows(table, indices):
    """Row lookup with scatter-add backward (embedding style)."""
    table = as_tensor(table)
    idx = np.asarray(indices, dtype=np.int64)

    def bw(g):
        out = np.zeros_like(table.data)
        np.add.at(out, idx, g)
        return (out,)

    return Tensor(table.data[idx], parents=(table,), backward=bw)
