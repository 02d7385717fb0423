"""Reverse-mode automatic differentiation over a deliberately small op set.

Every op returns a :class:`Tensor`.  When gradients are enabled and at least
one input requires a gradient, the result remembers its inputs and a closure
that pushes the incoming gradient back to them.  Nodes are numbered at
creation, so decreasing creation order is a valid topological order for the
backward sweep.

The op set is exactly what the models need: matmul and affine maps, add,
elementwise mul/sigmoid/tanh, concat/stack, slice/row, softmax, fused
softmax cross-entropy, embedding lookup, sum and mean.
"""
from __future__ import annotations

import itertools
from contextlib import contextmanager

import numpy as np

from ..errors import ConfigurationError

_counter = itertools.count()
_grad_enabled = True


@contextmanager
def no_grad():
    """Disable graph recording inside the block (inference, finite differences)."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


def is_grad_enabled():
    return _grad_enabled


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_id")

    def __init__(self, data, requires_grad=False):
        self.data = np.asarray(data)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self._id = next(_counter)

    @property
    def shape(self):
        return self.data.shape

    def __len__(self):
        return len(self.data)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"

    def item(self):
        return float(self.data)

    def backward(self):
        """Accumulate d(self)/d(leaf) into every reachable leaf's ``grad``."""
        if self.data.size != 1:
            raise ConfigurationError("backward() needs a scalar output")
        nodes = _reachable(self)
        self.grad = np.ones_like(self.data)
        for node in nodes:
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
                if not isinstance(node, Parameter):
                    node.grad = None


class Parameter(Tensor):
    """A named leaf whose gradient buffer persists across backward passes."""

    __slots__ = ("name",)

    def __init__(self, data, name):
        super().__init__(np.array(data, copy=True), requires_grad=True)
        self.name = name
        self.grad = np.zeros_like(self.data)

    def zero_grad(self):
        self.grad.fill(0.0)

    def __repr__(self):
        return f"Parameter({self.name!r}, shape={self.data.shape})"


def _reachable(root):
    seen = set()
    out = []
    stack = [root]
    while stack:
        node = stack.pop()
        if node._id in seen:
            continue
        seen.add(node._id)
        out.append(node)
        stack.extend(p for p in node._parents if p.requires_grad)
    out.sort(key=lambda n: n._id, reverse=True)
    return out


def parameters_in_graph(root):
    """Parameters that ``root`` depends on through recorded ops."""
    return [n for n in _reachable(root) if isinstance(n, Parameter)]


def _accum(t, g):
    if not t.requires_grad:
        return
    if isinstance(t, Parameter):
        t.grad += g
    elif t.grad is None:
        t.grad = g
    else:
        t.grad = t.grad + g


def _node(data, parents, backward):
    out = Tensor(data)
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _unbroadcast(g, shape):
    if g.shape == shape:
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def matmul(a, b):
    """Matrix/vector product for 1-D and 2-D operands."""
    a, b = as_tensor(a), as_tensor(b)
    A, B = a.data, b.data
    try:
        out = A @ B
    except ValueError as exc:
        raise ConfigurationError(f"matmul shape mismatch {A.shape} @ {B.shape}") from exc

    def backward(g):
        if A.ndim == 2 and B.ndim == 1:
            _accum(a, np.outer(g, B))
            _accum(b, A.T @ g)
        elif A.ndim == 1 and B.ndim == 2:
            _accum(a, B @ g)
            _accum(b, np.outer(A, g))
        elif A.ndim == 2 and B.ndim == 2:
            _accum(a, g @ B.T)
            _accum(b, A.T @ g)
        else:
            _accum(a, g * B)
            _accum(b, g * A)

    return _node(out, (a, b), backward)


def linear(x, W, b=None):
    """Affine map ``x @ W.T + b`` for a vector or a matrix of row vectors."""
    x, W = as_tensor(x), as_tensor(W)
    X, M = x.data, W.data
    try:
        out = X @ M.T
    except ValueError as exc:
        raise ConfigurationError(f"linear shape mismatch {X.shape} vs weight {M.shape}") from exc
    parents = (x, W)
    if b is not None:
        b = as_tensor(b)
        out = out + b.data
        parents = (x, W, b)

    def backward(g):
        if X.ndim == 1:
            _accum(W, np.outer(g, X))
            if b is not None:
                _accum(b, g)
        else:
            _accum(W, g.T @ X)
            if b is not None:
                _accum(b, g.sum(axis=0))
        _accum(x, g @ M)

    return _node(out, parents, backward)


def add(a, b):
    """Elementwise sum; ``b`` may broadcast over leading axes (bias rows)."""
    a, b = as_tensor(a), as_tensor(b)
    sa, sb = a.data.shape, b.data.shape

    def backward(g):
        _accum(a, _unbroadcast(g, sa))
        _accum(b, _unbroadcast(g, sb))

    return _node(a.data + b.data, (a, b), backward)


def add_n(terms):
    terms = [as_tensor(t) for t in terms]
    if not terms:
        raise ConfigurationError("add_n of an empty list")
    out = terms[0].data
    for t in terms[1:]:
        out = out + t.data

    def backward(g):
        for t in terms:
            _accum(t, g)

    return _node(out, tuple(terms), backward)


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    A, B = a.data, b.data

    def backward(g):
        _accum(a, _unbroadcast(g * B, A.shape))
        _accum(b, _unbroadcast(g * A, B.shape))

    return _node(A * B, (a, b), backward)


def scale(a, c):
    a = as_tensor(a)
    c = float(c)

    def backward(g):
        _accum(a, g * c)

    return _node(a.data * c, (a,), backward)


def sigmoid(a):
    a = as_tensor(a)
    # split form avoids exp overflow for large |x|
    x = a.data
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def backward(g):
        _accum(a, g * out * (1.0 - out))

    return _node(out, (a,), backward)


def tanh(a):
    a = as_tensor(a)
    out = np.tanh(a.data)

    def backward(g):
        _accum(a, g * (1.0 - out * out))

    return _node(out, (a,), backward)


def concat(parts):
    """Concatenate 1-D tensors."""
    parts = [as_tensor(p) for p in parts]
    if len(parts) == 1:
        return parts[0]
    sizes = [p.data.shape[0] for p in parts]
    bounds = np.cumsum([0] + sizes)
    out = np.concatenate([p.data for p in parts])

    def backward(g):
        for p, lo, hi in zip(parts, bounds[:-1], bounds[1:]):
            _accum(p, g[lo:hi])

    return _node(out, tuple(parts), backward)


def stack(rows):
    """Stack equal-length 1-D tensors into a matrix, one row each."""
    rows = [as_tensor(r) for r in rows]
    out = np.stack([r.data for r in rows])

    def backward(g):
        for i, r in enumerate(rows):
            _accum(r, g[i])

    return _node(out, tuple(rows), backward)


def slice_(a, start, stop):
    """``a[start:stop]`` of a 1-D tensor."""
    a = as_tensor(a)
    shape = a.data.shape

    def backward(g):
        full = np.zeros(shape, dtype=g.dtype)
        full[start:stop] = g
        _accum(a, full)

    return _node(a.data[start:stop], (a,), backward)


def row(a, i):
    """Row ``i`` of a matrix as a 1-D tensor."""
    a = as_tensor(a)
    shape = a.data.shape

    def backward(g):
        full = np.zeros(shape, dtype=g.dtype)
        full[i] = g
        _accum(a, full)

    return _node(a.data[i], (a,), backward)


def softmax_array(x):
    """Numerically stable softmax of a plain 1-D array."""
    x = np.asarray(x)
    if x.size == 0:
        raise ConfigurationError("softmax of an empty vector")
    z = np.exp(x - x.max())
    return z / z.sum()


def log_softmax_array(x):
    x = np.asarray(x)
    if x.size == 0:
        raise ConfigurationError("softmax of an empty vector")
    m = x.max()
    return x - (m + np.log(np.exp(x - m).sum()))


def softmax(a):
    a = as_tensor(a)
    p = softmax_array(a.data)

    def backward(g):
        _accum(a, p * (g - np.dot(g, p)))

    return _node(p, (a,), backward)


def softmax_cross_entropy(logits, target):
    """``-log softmax(logits)[target]`` as a scalar, fused for stability."""
    logits = as_tensor(logits)
    logp = log_softmax_array(logits.data)
    out = np.asarray(-logp[target])

    def backward(g):
        grad = np.exp(logp)
        grad[target] -= 1.0
        _accum(logits, g * grad)

    return _node(out, (logits,), backward)


def embedding(table, indices):
    """Rows of ``table``; an int index yields a vector, a sequence a matrix."""
    table = as_tensor(table)
    idx = np.asarray(indices, dtype=np.intp)
    out = table.data[idx]
    shape = table.data.shape

    def backward(g):
        full = np.zeros(shape, dtype=g.dtype)
        np.add.at(full, idx, g)
        _accum(table, full)

    return _node(out, (table,), backward)


def sum_(a):
    a = as_tensor(a)
    shape = a.data.shape

    def backward(g):
        _accum(a, np.broadcast_to(g, shape).copy())

    return _node(np.asarray(a.data.sum()), (a,), backward)


def mean(terms):
    """Mean of equally shaped tensors."""
    terms = list(terms)
    if len(terms) == 1:
        return as_tensor(terms[0])
    return scale(add_n(terms), 1.0 / len(terms))
