"""Dense float64 tensors with a reverse-mode gradient tape.

Every primitive records its parents and a closure mapping the output
gradient to input gradients.  :func:`backward` linearises the recorded graph
into a :class:`ComputationTape`, replays it in reverse topological order and
accumulates into the ``grad`` slot of leaf tensors.
"""
from __future__ import annotations

import contextlib
import threading

import numpy as np
from scipy import linalg as sla
from scipy.special import expit


class ShapeError(ValueError):
    pass


class NonFiniteError(FloatingPointError):
    pass


class GraphError(RuntimeError):
    pass


_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextlib.contextmanager
def no_grad():
    """Evaluate without recording anything on the tape."""
    prev = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = prev


def _check_finite(arr, what):
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"non-finite values produced by {what}")
    return arr


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op", "name")

    __array_priority__ = 100.0

    def __init__(self, data, requires_grad=False, name=None):
        arr = np.array(data, dtype=np.float64)
        _check_finite(arr, "tensor construction")
        self.data = arr
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self._parents = ()
        self._backward = None
        self._op = "leaf"
        self.name = name

    @classmethod
    def _result(cls, data, parents, backward, op):
        out = cls.__new__(cls)
        out.data = _check_finite(np.asarray(data, dtype=np.float64), op)
        out.grad = None
        out.name = None
        out._op = op
        if grad_enabled() and any(p.requires_grad for p in parents):
            out.requires_grad = True
            out._parents = parents
            out._backward = backward
        else:
            out.requires_grad = False
            out._parents = ()
            out._backward = None
        return out

    # -- basic properties -------------------------------------------------
    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def is_leaf(self):
        return not self._parents

    def numpy(self):
        return self.data

    def item(self):
        return float(self.data)

    def detach(self):
        return Tensor(self.data)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag})"

    def __len__(self):
        return len(self.data)

    # -- operator sugar ---------------------------------------------------
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

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __rmatmul__(self, other):
        return matmul(other, self)

    def __pow__(self, p):
        return power(self, p)

    def __getitem__(self, idx):
        return getitem(self, idx)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    @property
    def T(self):
        return transpose(self)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name=None) -> Tensor:
    return Tensor(data, requires_grad=True, name=name)


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (reverse of numpy broadcasting)."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def _broadcast_shape(a, b, op):
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise ShapeError(f"{op}: cannot broadcast {a.shape} with {b.shape}") from None


# -- elementwise binary -----------------------------------------------------
def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "add")

    def bw(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return Tensor._result(a.data + b.data, (a, b), bw, "add")


def sub(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "sub")

    def bw(g):
        return _unbroadcast(g, a.shape), -_unbroadcast(g, b.shape)

    return Tensor._result(a.data - b.data, (a, b), bw, "sub")


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "mul")

    def bw(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return Tensor._result(a.data * b.data, (a, b), bw, "mul")


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape(a, b, "div")
    out = a.data / b.data

    def bw(g):
        ga = g / b.data
        return _unbroadcast(ga, a.shape), _unbroadcast(-ga * out, b.shape)

    return Tensor._result(out, (a, b), bw, "div")


def neg(a):
    return Tensor._result(-a.data, (a,), lambda g: (-g,), "neg")


def power(a, p):
    p = float(p)
    out = a.data**p

    def bw(g):
        return (g * p * a.data ** (p - 1.0),)

    return Tensor._result(out, (a,), bw, "pow")


def square(a):
    return Tensor._result(a.data * a.data, (a,), lambda g: (2.0 * g * a.data,), "square")


# -- elementwise unary ------------------------------------------------------
def tanh(a):
    out = np.tanh(a.data)
    return Tensor._result(out, (a,), lambda g: (g * (1.0 - out * out),), "tanh")


def sigmoid(a):
    out = expit(a.data)
    return Tensor._result(out, (a,), lambda g: (g * out * (1.0 - out),), "sigmoid")


def exp(a):
    with np.errstate(over="ignore"):
        out = np.exp(a.data)
    return Tensor._result(out, (a,), lambda g: (g * out,), "exp")


def log(a):
    if np.any(a.data <= 0):
        raise NonFiniteError("log of non-positive value")
    return Tensor._result(np.log(a.data), (a,), lambda g: (g / a.data,), "log")


def gated_tanh(a):
    """``tanh(a[..., :H]) * sigmoid(a[..., H:])`` for a trailing size of ``2H``."""
    n = a.shape[-1]
    if n % 2:
        raise ShapeError(f"gated_tanh needs an even trailing size, got {n}")
    h = n // 2
    th = np.tanh(a.data[..., :h])
    sg = expit(a.data[..., h:])
    out = th * sg

    def bw(g):
        return (np.concatenate([g * sg * (1.0 - th * th), g * th * sg * (1.0 - sg)], axis=-1),)

    return Tensor._result(out, (a,), bw, "gated_tanh")


def clip(a, lo, hi):
    """Clamp to ``[lo, hi]``; no gradient flows through clamped entries."""
    inside = (a.data >= lo) & (a.data <= hi)
    return Tensor._result(np.clip(a.data, lo, hi), (a,), lambda g: (g * inside,), "clip")


def relu(a):
    mask = a.data > 0
    return Tensor._result(a.data * mask, (a,), lambda g: (g * mask,), "relu")


# -- reductions -------------------------------------------------------------
def _norm_axis(axis, ndim):
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(ax % ndim for ax in axis)


def tsum(a, axis=None, keepdims=False):
    axes = _norm_axis(axis, a.ndim)
    out = a.data.sum(axis=axes, keepdims=keepdims)

    def bw(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.broadcast_to(g, a.shape).copy(),)

    return Tensor._result(out, (a,), bw, "sum")


def mean(a, axis=None, keepdims=False):
    axes = _norm_axis(axis, a.ndim)
    n = int(np.prod([a.shape[ax] for ax in axes])) if axes else 1
    return tsum(a, axis, keepdims) * (1.0 / n)


def tmax(a, axis):
    """Max along one axis; gradient goes to the first maximiser."""
    axis = axis % a.ndim
    idx = np.argmax(a.data, axis=axis)
    idx_e = np.expand_dims(idx, axis)
    out = np.take_along_axis(a.data, idx_e, axis=axis).squeeze(axis)

    def bw(g):
        grad = np.zeros_like(a.data)
        np.put_along_axis(grad, idx_e, np.expand_dims(g, axis), axis=axis)
        return (grad,)

    return Tensor._result(out, (a,), bw, "max")


# -- linear algebra ---------------------------------------------------------
def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 1 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise ShapeError(f"matmul: incompatible shapes {a.shape} @ {b.shape}")
    out = a.data @ b.data

    def bw(g):
        if a.ndim == 1:
            ga = g @ np.swapaxes(b.data, -1, -2)
            gb = np.outer(a.data, g)
            return ga, gb
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return Tensor._result(out, (a, b), bw, "matmul")


def linear(x, w, b=None):
    """``x @ w + b`` as one tape node; ``w`` is 2-D, ``b`` 1-D or None."""
    x, w = as_tensor(x), as_tensor(w)
    if w.ndim != 2 or x.shape[-1] != w.shape[0]:
        raise ShapeError(f"linear: incompatible shapes {x.shape} @ {w.shape}")
    out = x.data @ w.data
    if b is not None:
        b = as_tensor(b)
        out = out + b.data
    parents = (x, w) if b is None else (x, w, b)

    def bw(g):
        gx = g @ w.data.T
        g2 = g.reshape(-1, g.shape[-1])
        gw = x.data.reshape(-1, x.shape[-1]).T @ g2
        if b is None:
            return gx, gw
        return gx, gw, g2.sum(axis=0)

    return Tensor._result(out, parents, bw, "linear")


def solve_triangular(a, b, lower, unit_diagonal=False):
    """Solve ``a @ y = b`` for triangular 2-D ``a`` and 2-D ``b``."""
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or b.ndim != 2 or b.shape[0] != a.shape[0]:
        raise ShapeError(f"solve_triangular: bad shapes {a.shape}, {b.shape}")
    y = sla.solve_triangular(a.data, b.data, lower=lower, unit_diagonal=unit_diagonal)
    n = a.shape[0]
    tri = np.tril(np.ones((n, n))) if lower else np.triu(np.ones((n, n)))
    if unit_diagonal:
        tri = tri - np.eye(n)

    def bw(g):
        gb = sla.solve_triangular(a.data, g, lower=lower, trans="T", unit_diagonal=unit_diagonal)
        ga = -(gb @ y.T) * tri
        return ga, gb

    return Tensor._result(y, (a, b), bw, "solve_triangular")


# -- shape manipulation -----------------------------------------------------
def reshape(a, shape):
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise ShapeError(f"reshape: cannot view {a.shape} as {shape}") from None
    return Tensor._result(out, (a,), lambda g: (g.reshape(a.shape),), "reshape")


def transpose(a, axes=None):
    out = np.transpose(a.data, axes)
    inv = None if axes is None else np.argsort(axes)
    return Tensor._result(out, (a,), lambda g: (np.transpose(g, inv),), "transpose")


def _has_advanced(idx):
    items = idx if isinstance(idx, tuple) else (idx,)
    return any(isinstance(i, (list, np.ndarray)) for i in items)


def getitem(a, idx):
    try:
        out = a.data[idx]
    except IndexError as err:
        raise ShapeError(f"slice: {err}") from None
    advanced = _has_advanced(idx)

    def bw(g):
        grad = np.zeros_like(a.data)
        if advanced:
            np.add.at(grad, idx, g)
        else:
            grad[idx] += g
        return (grad,)

    return Tensor._result(np.array(out), (a,), bw, "slice")


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as err:
        raise ShapeError(f"concat: {err}") from None
    ax = axis % out.ndim
    bounds = np.cumsum([t.shape[ax] for t in tensors])[:-1]

    def bw(g):
        return tuple(np.split(g, bounds, axis=ax))

    return Tensor._result(out, tuple(tensors), bw, "concat")


def broadcast_to(a, shape):
    out = np.broadcast_to(a.data, shape).copy()
    return Tensor._result(out, (a,), lambda g: (_unbroadcast(g, a.shape),), "broadcast")


# -- the tape ---------------------------------------------------------------
class ComputationTape:
    """Topologically ordered record of the graph reaching ``output``."""

    def __init__(self, output: Tensor):
        self.output = output
        self.nodes = self._linearise(output)

    @staticmethod
    def _linearise(root):
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
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        return order

    def replay(self, seed_grad):
        grads = {id(self.output): seed_grad}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node.is_leaf:
                node.grad = g.copy() if node.grad is None else node.grad + g
                continue
            for parent, pg in zip(node._parents, node._backward(g)):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg

    def clear(self):
        for node in self.nodes:
            if not node.is_leaf:
                node._parents = ()
                node._backward = None


def backward(loss: Tensor, retain_graph=False):
    """Populate ``grad`` of every leaf reachable from scalar ``loss``."""
    if loss.data.size != 1:
        raise ShapeError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not loss.requires_grad:
        raise GraphError("loss is not connected to any parameter on the tape")
    tape = ComputationTape(loss)
    tape.replay(np.ones_like(loss.data))
    if not retain_graph:
        tape.clear()


# functional aliases used across the package
sum = tsum  # noqa: A001
max = tmax  # noqa: A001
