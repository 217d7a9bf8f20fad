"""Tape-based reverse-mode autodiff over numpy arrays.

A Tensor wraps an ndarray and remembers how it was produced; backward()
walks the tape in reverse topological order and accumulates gradients
into every reachable leaf with ``requires_grad``.  Ops preserve the
dtype of their inputs (float64 in tests, float32 allowed for training
speed) and are deterministic: the same inputs always produce bitwise
identical outputs.

Graph recording can be suspended with ``no_grad()`` for inference.
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np
from scipy import special as _sp

_grad_enabled = True


@contextmanager
def no_grad():
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class ShapeMismatch(ValueError):
    pass


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum grad down to `shape`, undoing numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for ax, dim in enumerate(shape):
        if dim == 1 and grad.shape[ax] != 1:
            grad = grad.sum(axis=ax, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_vjps")

    def __init__(self, data, requires_grad: bool = False):
        self.data = np.asarray(data, dtype=np.float64) if not isinstance(data, np.ndarray) else data
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents: tuple[Tensor, ...] = ()
        self._vjps: tuple = ()

    # -- construction helpers -------------------------------------------------

    @classmethod
    def param(cls, data: np.ndarray) -> "Tensor":
        return cls(np.ascontiguousarray(data), requires_grad=True)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.data.shape}, dtype={self.data.dtype}, grad={'yes' if self.requires_grad else 'no'})"

    # -- tape -----------------------------------------------------------------

    def _record(self, parents: tuple["Tensor", ...], vjps: tuple) -> "Tensor":
        """Attach provenance if grads are enabled and any parent needs them."""
        if _grad_enabled and any(p.requires_grad for p in parents):
            self.requires_grad = True
            self._parents = parents
            self._vjps = vjps
        return self

    def backward(self) -> None:
        """Accumulate gradients of this scalar into all reachable leaves."""
        if self.data.size != 1:
            raise ValueError("backward() requires a scalar output")
        topo: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if p.requires_grad and id(p) not in seen:
                    stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.ones_like(self.data)}
        for node in reversed(topo):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if not node._parents:
                node.grad = g if node.grad is None else node.grad + g
                continue
            for parent, vjp in zip(node._parents, node._vjps):
                if not parent.requires_grad or vjp is None:
                    continue
                contrib = vjp(g)
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + contrib
                else:
                    grads[key] = contrib
            # leaves with parents do not occur; intermediate grads are dropped

    # -- arithmetic -----------------------------------------------------------

    def __add__(self, other) -> "Tensor":
        other = as_tensor(other, self.dtype)
        out = Tensor(self.data + other.data)
        return out._record(
            (self, other),
            (lambda g: _unbroadcast(g, self.data.shape),
             lambda g: _unbroadcast(g, other.data.shape)),
        )

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        out = Tensor(-self.data)
        return out._record((self,), (lambda g: -g,))

    def __sub__(self, other) -> "Tensor":
        other = as_tensor(other, self.dtype)
        out = Tensor(self.data - other.data)
        return out._record(
            (self, other),
            (lambda g: _unbroadcast(g, self.data.shape),
             lambda g: _unbroadcast(-g, other.data.shape)),
        )

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other, self.dtype) - self

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other, self.dtype)
        a, b = self.data, other.data
        out = Tensor(a * b)
        return out._record(
            (self, other),
            (lambda g: _unbroadcast(g * b, a.shape),
             lambda g: _unbroadcast(g * a, b.shape)),
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other, self.dtype)
        a, b = self.data, other.data
        out = Tensor(a / b)
        return out._record(
            (self, other),
            (lambda g: _unbroadcast(g / b, a.shape),
             lambda g: _unbroadcast(-g * a / (b * b), b.shape)),
        )

    def __rtruediv__(self, other) -> "Tensor":
        return as_tensor(other, self.dtype) / self

    def __pow__(self, exponent: float) -> "Tensor":
        if not isinstance(exponent, (int, float)):
            raise TypeError("only scalar exponents are supported")
        a = self.data
        out = Tensor(a ** exponent)
        return out._record((self,), (lambda g: g * exponent * a ** (exponent - 1),))

    def __matmul__(self, other) -> "Tensor":
        other = as_tensor(other, self.dtype)
        a, b = self.data, other.data
        try:
            out = Tensor(a @ b)
        except ValueError as exc:
            raise ShapeMismatch(f"matmul {a.shape} @ {b.shape}") from exc

        def grad_a(g):
            ga = g @ np.swapaxes(b, -1, -2) if b.ndim > 1 else np.outer(g, b).reshape(a.shape)
            return _unbroadcast(ga, a.shape)

        def grad_b(g):
            if a.ndim == 1:
                return np.outer(a, g).reshape(b.shape) if b.ndim > 1 else a * g
            if b.ndim == 1:
                return _unbroadcast((np.swapaxes(a, -1, -2) @ g[..., None])[..., 0], b.shape)
            return _unbroadcast(np.swapaxes(a, -1, -2) @ g, b.shape)

        return out._record((self, other), (grad_a, grad_b))

    # -- shape ops ------------------------------------------------------------

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        old = self.data.shape
        out = Tensor(self.data.reshape(shape))
        return out._record((self,), (lambda g: g.reshape(old),))

    def transpose(self, *axes) -> "Tensor":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        inverse = np.argsort(axes)
        out = Tensor(self.data.transpose(axes))
        return out._record((self,), (lambda g: g.transpose(inverse),))

    def swapaxes(self, a: int, b: int) -> "Tensor":
        out = Tensor(np.swapaxes(self.data, a, b))
        return out._record((self,), (lambda g: np.swapaxes(g, a, b),))

    def __getitem__(self, key) -> "Tensor":
        out = Tensor(self.data[key])
        shape, dtype = self.data.shape, self.data.dtype

        def grad(g):
            buf = np.zeros(shape, dtype=dtype)
            np.add.at(buf, key, g)
            return buf

        return out._record((self,), (grad,))

    # -- reductions -----------------------------------------------------------

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims))
        shape = self.data.shape

        def grad(g):
            if axis is None:
                return np.broadcast_to(g, shape).astype(g.dtype, copy=False) * np.ones(1, dtype=g.dtype)
            gg = g if keepdims else np.expand_dims(g, axis)
            return np.broadcast_to(gg, shape) + np.zeros(1, dtype=g.dtype)

        return out._record((self,), (grad,))

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        n = self.data.size if axis is None else np.prod(
            [self.data.shape[a] for a in (axis if isinstance(axis, tuple) else (axis,))]
        )
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / float(n))

    # -- elementwise ----------------------------------------------------------

    def exp(self) -> "Tensor":
        y = np.exp(self.data)
        out = Tensor(y)
        return out._record((self,), (lambda g: g * y,))

    def log(self) -> "Tensor":
        a = self.data
        out = Tensor(np.log(a))
        return out._record((self,), (lambda g: g / a,))

    def sqrt(self) -> "Tensor":
        y = np.sqrt(self.data)
        out = Tensor(y)
        return out._record((self,), (lambda g: g * 0.5 / y,))

    def sigmoid(self) -> "Tensor":
        a = self.data
        y = np.empty_like(a)
        pos = a >= 0
        y[pos] = 1.0 / (1.0 + np.exp(-a[pos]))
        ez = np.exp(a[~pos])
        y[~pos] = ez / (1.0 + ez)
        out = Tensor(y)
        return out._record((self,), (lambda g: g * y * (1.0 - y),))

    def tanh(self) -> "Tensor":
        y = np.tanh(self.data)
        out = Tensor(y)
        return out._record((self,), (lambda g: g * (1.0 - y * y),))

    def gelu(self) -> "Tensor":
        """Exact Gaussian-CDF GeLU: x * Phi(x)."""
        a = self.data
        cdf = 0.5 * (1.0 + _sp.erf(a / np.sqrt(np.asarray(2.0, dtype=a.dtype))))
        out = Tensor(a * cdf)
        inv_sqrt2pi = 1.0 / np.sqrt(2.0 * np.pi)

        def grad(g):
            pdf = inv_sqrt2pi * np.exp(-0.5 * a * a)
            return g * (cdf + a * pdf)

        return out._record((self,), (grad,))

    def clamp_probs(self, eps: float = 1e-7) -> "Tensor":
        """Clip into [eps, 1-eps]; gradient passes through the interior only."""
        a = self.data
        y = np.clip(a, eps, 1.0 - eps)
        inside = ((a > eps) & (a < 1.0 - eps)).astype(a.dtype)
        out = Tensor(y)
        return out._record((self,), (lambda g: g * inside,))

    # -- fused numerics --------------------------------------------------------

    def softmax(self, axis: int = -1) -> "Tensor":
        a = self.data
        shifted = a - a.max(axis=axis, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=axis, keepdims=True)
        out = Tensor(y)

        def grad(g):
            dot = (g * y).sum(axis=axis, keepdims=True)
            return y * (g - dot)

        return out._record((self,), (grad,))

    def log_softmax(self, axis: int = -1) -> "Tensor":
        a = self.data
        shifted = a - a.max(axis=axis, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=axis, keepdims=True))
        y = shifted - lse
        out = Tensor(y)
        sm = np.exp(y)

        def grad(g):
            return g - sm * g.sum(axis=axis, keepdims=True)

        return out._record((self,), (grad,))


def as_tensor(value, dtype=None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    arr = np.asarray(value, dtype=dtype if dtype is not None else np.float64)
    return Tensor(arr)


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    datas = [t.data for t in tensors]
    out = Tensor(np.concatenate(datas, axis=axis))
    sizes = [d.shape[axis] for d in datas]
    offsets = np.cumsum([0] + sizes)

    def make_grad(k):
        lo, hi = offsets[k], offsets[k + 1]

        def grad(g):
            index = [slice(None)] * g.ndim
            index[axis] = slice(lo, hi)
            return g[tuple(index)]

        return grad

    return out._record(tuple(tensors), tuple(make_grad(k) for k in range(len(tensors))))


def stack(tensors: list[Tensor], axis: int = 0) -> Tensor:
    out = Tensor(np.stack([t.data for t in tensors], axis=axis))

    def make_grad(k):
        def grad(g):
            return np.take(g, k, axis=axis)

        return grad

    return out._record(tuple(tensors), tuple(make_grad(k) for k in range(len(tensors))))


def embedding_lookup(table: Tensor, ids: np.ndarray) -> Tensor:
    """Gather rows of `table` (V, D) by an integer id array of any shape."""
    ids = np.asarray(ids)
    out = Tensor(table.data[ids])
    shape, dtype = table.data.shape, table.data.dtype

    def grad(g):
        buf = np.zeros(shape, dtype=dtype)
        np.add.at(buf, ids.reshape(-1), g.reshape(-1, shape[-1]))
        return buf

    return out._record((table,), (grad,))


def gather_last(x: Tensor, index: np.ndarray) -> Tensor:
    """Pick one entry along the last axis: out[...] = x[..., index[...]]."""
    index = np.asarray(index)
    grid = np.ix_(*[np.arange(d) for d in index.shape])
    out = Tensor(x.data[grid + (index,)])
    shape, dtype = x.data.shape, x.data.dtype

    def grad(g):
        buf = np.zeros(shape, dtype=dtype)
        np.add.at(buf, grid + (index,), g)
        return buf

    return out._record((x,), (grad,))


def where_const(cond: np.ndarray, a: Tensor, b: Tensor) -> Tensor:
    """Elementwise select with a constant boolean mask."""
    a = as_tensor(a)
    b = as_tensor(b)
    out = Tensor(np.where(cond, a.data, b.data))
    return out._record(
        (a, b),
        (lambda g: _unbroadcast(np.where(cond, g, 0.0), a.data.shape),
         lambda g: _unbroadcast(np.where(cond, 0.0, g), b.data.shape)),
    )
