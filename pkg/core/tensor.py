"""
core/tensor.py: dense 2-D tensors with reverse-mode autodiff

Every tensor is a float64 matrix. Operations record their parents and a backward
closure; `backward(loss)` walks the graph once in reverse topological order and
accumulates gradients into leaves that require them.

    W = Tensor(rng.normal(size=(4, 2)), requires_grad=True)
    loss = reduce("sum", matmul(x, W))
    grads = backward(loss, {"W": W})
"""

from __future__ import annotations
from typing import Callable, Iterable, Mapping, Optional, Union

import numpy as np
from scipy.special import expit

from utils.errors import ContractError, DimensionError, DomainError

ArrayLike = Union["Tensor", np.ndarray, float, int, list]


class Tensor:
    """A rows×cols float64 matrix plus the tape entry that produced it."""

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        _parents: tuple["Tensor", ...] = (),
        _op: str = "leaf",
    ):
        if isinstance(data, Tensor):
            data = data.data
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        elif arr.ndim > 2:
            raise DimensionError(f"tensors are 2-D, got shape {arr.shape}")
        self.data          = arr
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self.grad: Optional[np.ndarray] = None
        self._parents      = _parents
        self._op           = _op
        self._backward: Optional[Callable[[np.ndarray], None]] = None

    # ── Introspection ────────────────────────────────────────────────────────

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def T(self) -> "Tensor":
        return transpose(self)

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ContractError(f"item() needs a scalar tensor, got shape {self.shape}")
        return float(self.data[0, 0])

    def numpy(self) -> np.ndarray:
        return self.data.copy()

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, op={self._op}, requires_grad={self.requires_grad})"

    # ── Operators ────────────────────────────────────────────────────────────

    def __add__(self, other: ArrayLike) -> "Tensor":
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other: ArrayLike) -> "Tensor":
        return sub(self, other)

    def __rsub__(self, other: ArrayLike) -> "Tensor":
        return sub(other, self)

    def __mul__(self, other: ArrayLike) -> "Tensor":
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other: ArrayLike) -> "Tensor":
        return div(self, other)

    def __rtruediv__(self, other: ArrayLike) -> "Tensor":
        return div(other, self)

    def __neg__(self) -> "Tensor":
        return neg(self)

    def __matmul__(self, other: ArrayLike) -> "Tensor":
        return matmul(self, other)


def constant(data: ArrayLike) -> Tensor:
    return data if isinstance(data, Tensor) else Tensor(data)


def _accumulate(t: Tensor, g: np.ndarray) -> None:
    if not t.requires_grad:
        return
    if g.shape != t.shape:
        g = _unbroadcast(g, t.shape)
    t.grad = g.copy() if t.grad is None else t.grad + g


def _unbroadcast(g: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    for axis in (0, 1):
        if shape[axis] == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _broadcast_shape(a: Tensor, b: Tensor) -> tuple[int, int]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)  # type: ignore[return-value]
    except ValueError:
        raise DimensionError(f"incompatible shapes {a.shape} and {b.shape}") from None


def _node(data: np.ndarray, parents: tuple[Tensor, ...], op: str,
          backward_fn: Callable[[np.ndarray], None]) -> Tensor:
    out = Tensor(data, _parents=parents, _op=op)
    if out.requires_grad:
        out._backward = backward_fn
    return out


# ─── Linear algebra ───────────────────────────────────────────────────────────

def matmul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = constant(a), constant(b)
    if a.cols != b.rows:
        raise DimensionError(f"matmul shape mismatch: {a.shape} @ {b.shape}")

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g @ b.data.T)
        _accumulate(b, a.data.T @ g)

    return _node(a.data @ b.data, (a, b), "matmul", _bw)


def transpose(a: ArrayLike) -> Tensor:
    a = constant(a)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g.T)

    return _node(a.data.T, (a,), "transpose", _bw)


# ─── Binary elementwise (2-D broadcasting) ───────────────────────────────────

def add(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = constant(a), constant(b)
    _broadcast_shape(a, b)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g)
        _accumulate(b, g)

    return _node(a.data + b.data, (a, b), "add", _bw)


def sub(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = constant(a), constant(b)
    _broadcast_shape(a, b)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g)
        _accumulate(b, -g)

    return _node(a.data - b.data, (a, b), "sub", _bw)


def mul(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = constant(a), constant(b)
    _broadcast_shape(a, b)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g * b.data)
        _accumulate(b, g * a.data)

    return _node(a.data * b.data, (a, b), "mul", _bw)


def div(a: ArrayLike, b: ArrayLike) -> Tensor:
    a, b = constant(a), constant(b)
    _broadcast_shape(a, b)
    if np.any(b.data == 0.0):
        raise DomainError(f"division by zero (divisor shape {b.shape})")

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g / b.data)
        _accumulate(b, -g * a.data / (b.data ** 2))

    return _node(a.data / b.data, (a, b), "div", _bw)


def add_bias(x: ArrayLike, bias: ArrayLike) -> Tensor:
    """x (n×k) + bias (1×k), bias broadcast over rows."""
    x, bias = constant(x), constant(bias)
    if bias.rows != 1 or bias.cols != x.cols:
        raise DimensionError(f"bias {bias.shape} does not broadcast over {x.shape}")
    return add(x, bias)


# ─── Unary elementwise ────────────────────────────────────────────────────────

def neg(a: ArrayLike) -> Tensor:
    a = constant(a)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, -g)

    return _node(-a.data, (a,), "neg", _bw)


def exp(a: ArrayLike) -> Tensor:
    a = constant(a)
    y = np.exp(a.data)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g * y)

    return _node(y, (a,), "exp", _bw)


def log(a: ArrayLike) -> Tensor:
    a = constant(a)
    if np.any(a.data <= 0.0):
        raise DomainError("log of a non-positive entry")

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g / a.data)

    return _node(np.log(a.data), (a,), "log", _bw)


def square(a: ArrayLike) -> Tensor:
    a = constant(a)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, 2.0 * a.data * g)

    return _node(a.data * a.data, (a,), "square", _bw)


def sqrt(a: ArrayLike) -> Tensor:
    a = constant(a)
    if np.any(a.data < 0.0):
        raise DomainError("sqrt of a negative entry")
    y = np.sqrt(a.data)

    def _bw(g: np.ndarray) -> None:
        safe = np.where(y > 0.0, y, 1.0)
        _accumulate(a, np.where(y > 0.0, g / (2.0 * safe), 0.0))

    return _node(y, (a,), "sqrt", _bw)


def softplus(a: ArrayLike) -> Tensor:
    """log(1 + e^a), evaluated without overflow."""
    a = constant(a)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g * expit(a.data))

    return _node(np.logaddexp(0.0, a.data), (a,), "softplus", _bw)


def tanh(a: ArrayLike) -> Tensor:
    a = constant(a)
    y = np.tanh(a.data)

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, g * (1.0 - y * y))

    return _node(y, (a,), "tanh", _bw)


_BINARY = {"add": add, "subtract": sub, "multiply": mul, "divide": div, "add_bias": add_bias}
_UNARY  = {"exp": exp, "log": log, "square": square, "sqrt": sqrt,
           "softplus": softplus, "tanh": tanh, "neg": neg}


def elementwise(kind: str, a: ArrayLike, b: Optional[ArrayLike] = None) -> Tensor:
    if kind in _BINARY:
        if b is None:
            raise ContractError(f"elementwise '{kind}' needs two operands")
        return _BINARY[kind](a, b)
    if kind in _UNARY:
        return _UNARY[kind](a)
    raise ContractError(f"unknown elementwise op '{kind}'")


# ─── Reductions ───────────────────────────────────────────────────────────────

def _check_nonempty(a: Tensor) -> None:
    if a.data.size == 0:
        raise DomainError(f"reduction over empty tensor {a.shape}")


def sum_(a: ArrayLike, axis: Optional[int] = None) -> Tensor:
    a = constant(a)
    _check_nonempty(a)
    shape = a.shape

    def _bw(g: np.ndarray) -> None:
        _accumulate(a, np.broadcast_to(g, shape).copy())

    return _node(a.data.sum(axis=axis, keepdims=True), (a,), "sum", _bw)


def mean(a: ArrayLike, axis: Optional[int] = None) -> Tensor:
    a = constant(a)
    _check_nonempty(a)
    count = a.data.size if axis is None else a.shape[axis]
    return sum_(a, axis) * (1.0 / count)


def frobenius(a: ArrayLike) -> Tensor:
    """‖a‖_F; the gradient at the all-zero tensor is taken to be zero."""
    a = constant(a)
    _check_nonempty(a)
    n = float(np.sqrt(np.sum(a.data * a.data)))

    def _bw(g: np.ndarray) -> None:
        if n > 0.0:
            _accumulate(a, g * a.data / n)

    return _node(np.array([[n]]), (a,), "frobenius", _bw)


_REDUCE = {"sum": sum_, "mean": mean, "frobenius": frobenius}


def reduce(kind: str, a: ArrayLike) -> Tensor:
    if kind not in _REDUCE:
        raise ContractError(f"unknown reduction '{kind}'")
    return _REDUCE[kind](a)


# ─── Row-wise helpers for correlation ─────────────────────────────────────────

def center_rows(a: ArrayLike) -> Tensor:
    """Subtract each row's mean over its columns."""
    a = constant(a)
    return a - mean(a, axis=1)


def center_cols(a: ArrayLike) -> Tensor:
    """Subtract each column's mean over the batch."""
    a = constant(a)
    return a - mean(a, axis=0)


def normalize_rows(a: ArrayLike) -> Tensor:
    """Scale each row to unit L2 norm; all-zero rows map to zero rows with zero gradient."""
    a = constant(a)
    norms = np.sqrt(np.sum(a.data * a.data, axis=1, keepdims=True))
    live  = norms > 0.0
    safe  = np.where(live, norms, 1.0)
    y     = np.where(live, a.data / safe, 0.0)

    def _bw(g: np.ndarray) -> None:
        proj = np.sum(g * y, axis=1, keepdims=True)
        _accumulate(a, np.where(live, (g - y * proj) / safe, 0.0))

    return _node(y, (a,), "normalize_rows", _bw)


# ─── Backward ─────────────────────────────────────────────────────────────────

def _topological(root: Tensor) -> list[Tensor]:
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


def backward(
    loss: Tensor,
    params: Optional[Mapping[str, Tensor]] = None,
) -> dict[str, np.ndarray]:
    """
    Propagate d(loss)/d(·) to every leaf on the tape.

    Leaf gradients accumulate across calls (call `zero_grad` between steps);
    intermediate gradients are rebuilt on each call. Returns the gradient of each
    entry of `params`, zeros for parameters the loss does not depend on.
    """
    if loss.shape != (1, 1):
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")

    order = _topological(loss)
    for node in order:
        if node._parents:
            node.grad = None

    _accumulate(loss, np.ones((1, 1)))
    for node in reversed(order):
        if node._backward is not None and node.grad is not None:
            node._backward(node.grad)

    if params is None:
        return {}
    return {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in params.items()
    }


def zero_grads(params: Iterable[Tensor]) -> None:
    for p in params:
        p.zero_grad()
