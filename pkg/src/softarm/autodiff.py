"""Small reverse-mode automatic differentiation engine on float64 numpy arrays.

Define-by-run: every primitive call records its parents and a backward
closure on the produced node; ``backward`` on a scalar output walks the tape
in reverse topological order. The primitive set is fixed (matmul, add, mul,
tanh, sigmoid, concat, slice, sum, mean, square, sqrt, reciprocal,
maximum-with-constant); anything else fails at graph construction time.
"""

from __future__ import annotations

import numpy as np

_SUPPORTED = (
    "matmul, add, mul, tanh, sigmoid, concat, narrow (slice), sum, mean, "
    "square, sqrt, reciprocal, maximum_const"
)


class UnsupportedPrimitiveError(TypeError):
    """A computation tried to use an operation outside the primitive set."""

    def __init__(self, op: str):
        super().__init__(f"primitive '{op}' is not supported; available: {_SUPPORTED}")


class Tensor:
    """Array value plus optional gradient and tape bookkeeping."""

    __slots__ = ("value", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, value, requires_grad: bool = False):
        v = value if isinstance(value, np.ndarray) else np.asarray(value, dtype=np.float64)
        if v.dtype != np.float64:
            v = v.astype(np.float64)
        self.value = v
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None

    @property
    def shape(self):
        return self.value.shape

    def item(self) -> float:
        return float(self.value)

    # -- operator sugar (desugars onto the primitive set) --
    def __add__(self, other):
        return add(self, _as_tensor(other))

    __radd__ = __add__

    def __mul__(self, other):
        return mul(self, _as_tensor(other))

    __rmul__ = __mul__

    def __neg__(self):
        return mul(self, Tensor(-1.0))

    def __sub__(self, other):
        return add(self, mul(_as_tensor(other), Tensor(-1.0)))

    def __rsub__(self, other):
        return add(_as_tensor(other), mul(self, Tensor(-1.0)))

    def __matmul__(self, other):
        return matmul(self, _as_tensor(other))

    def __truediv__(self, other):
        return mul(self, reciprocal(_as_tensor(other)))

    def __pow__(self, exponent):
        if exponent == 2:
            return square(self)
        raise UnsupportedPrimitiveError(f"pow({exponent})")

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, requires_grad={self.requires_grad})"

    # -- autodiff --
    def backward(self) -> None:
        """Accumulate gradients of this scalar into every reachable input."""
        if self.value.size != 1:
            raise ValueError("backward() requires a scalar output")
        order = _toposort(self)
        self.grad = np.ones_like(self.value)
        for node in order:
            fn = node._backward
            if fn is not None and node.grad is not None:
                fn(node.grad)


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, processed = stack.pop()
        if processed:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    order.reverse()
    return order


def _needs(node: Tensor) -> bool:
    return node.requires_grad or node._backward is not None


def _accumulate(node: Tensor, grad: np.ndarray) -> None:
    # gradients are only ever rebound, never mutated in place, so views and
    # shared arrays are safe to store
    node.grad = grad if node.grad is None else node.grad + grad


def _needs_tape(*tensors: Tensor) -> bool:
    return any(t.requires_grad or t._backward is not None for t in tensors)


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum out broadcast axes so grad matches the original operand shape."""
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad


def _make(value: np.ndarray, parents: tuple, backward) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.value = value
    out.grad = None
    out.requires_grad = False
    out._parents = parents
    out._backward = backward
    return out


# ---------------------------------------------------------------------------
# primitives


def add(a: Tensor, b: Tensor) -> Tensor:
    value = a.value + b.value
    if not _needs_tape(a, b):
        return Tensor(value)

    def backward(g):
        if _needs(a):
            _accumulate(a, _unbroadcast(g, a.value.shape))
        if _needs(b):
            _accumulate(b, _unbroadcast(g, b.value.shape))

    return _make(value, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    value = a.value * b.value
    if not _needs_tape(a, b):
        return Tensor(value)

    def backward(g):
        if _needs(a):
            _accumulate(a, _unbroadcast(g * b.value, a.value.shape))
        if _needs(b):
            _accumulate(b, _unbroadcast(g * a.value, b.value.shape))

    return _make(value, (a, b), backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.value.ndim != 2 or b.value.ndim != 2:
        raise UnsupportedPrimitiveError(f"matmul on ndim {a.value.ndim}x{b.value.ndim}")
    value = a.value @ b.value
    if not _needs_tape(a, b):
        return Tensor(value)

    def backward(g):
        if _needs(a):
            _accumulate(a, g @ b.value.T)
        if _needs(b):
            _accumulate(b, a.value.T @ g)

    return _make(value, (a, b), backward)


def tanh(x: Tensor) -> Tensor:
    value = np.tanh(x.value)
    if not _needs_tape(x):
        return Tensor(value)

    def backward(g):
        _accumulate(x, g * (1.0 - value * value))

    return _make(value, (x,), backward)


def sigmoid(x: Tensor) -> Tensor:
    value = 1.0 / (1.0 + np.exp(-x.value))
    if not _needs_tape(x):
        return Tensor(value)

    def backward(g):
        _accumulate(x, g * value * (1.0 - value))

    return _make(value, (x,), backward)


def concat(tensors: list[Tensor], axis: int = -1) -> Tensor:
    value = np.concatenate([t.value for t in tensors], axis=axis)
    if not _needs_tape(*tensors):
        return Tensor(value)
    sizes = [t.value.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        pieces = np.split(g, offsets[1:-1], axis=axis)
        for t, piece in zip(tensors, pieces):
            if _needs(t):
                _accumulate(t, piece)

    return _make(value, tuple(tensors), backward)


def narrow(x: Tensor, axis: int, start: int, length: int) -> Tensor:
    """Contiguous slice of ``length`` elements from ``start`` along ``axis``."""
    index = [slice(None)] * x.value.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)
    value = x.value[index]
    if not _needs_tape(x):
        return Tensor(value)

    def backward(g):
        full = np.zeros_like(x.value)
        full[index] = g
        _accumulate(x, full)

    return _make(value, (x,), backward)


def tensor_sum(x: Tensor) -> Tensor:
    value = np.asarray(x.value.sum())
    if not _needs_tape(x):
        return Tensor(value)

    def backward(g):
        _accumulate(x, np.broadcast_to(g, x.value.shape))

    return _make(value, (x,), backward)


def mean(x: Tensor) -> Tensor:
    n = x.value.size
    value = np.asarray(x.value.mean())
    if not _needs_tape(x):
        return Tensor(value)

    def backward(g):
        _accumulate(x, np.broadcast_to(g / n, x.value.shape))

    return _make(value, (x,), backward)


def square(x: Tensor) -> Tensor:
    value = x.value * x.value
    if not _needs_tape(x):
        return Tensor(value)

    def backward(g):
        _accumulate(x, g * (2.0 * x.value))

    return _make(value, (x,), backward)


def sqrt(x: Tensor) -> Tensor:
    value = np.sqrt(x.value)
    if not _needs_tape(x):
        return Tensor(value)

    def backward(g):
        # subgradient 0 at exactly zero, so norms of zero vectors do not blow up
        denom = np.where(value > 0.0, 2.0 * value, np.inf)
        _accumulate(x, g / denom)

    return _make(value, (x,), backward)


def reciprocal(x: Tensor) -> Tensor:
    value = 1.0 / x.value
    if not _needs_tape(x):
        return Tensor(value)

    def backward(g):
        _accumulate(x, -g * value * value)

    return _make(value, (x,), backward)


def maximum_const(x: Tensor, constant: float) -> Tensor:
    """Elementwise max(x, c); gradient passes only where x > c."""
    value = np.maximum(x.value, constant)
    if not _needs_tape(x):
        return Tensor(value)
    mask = x.value > constant

    def backward(g):
        _accumulate(x, g * mask)

    return _make(value, (x,), backward)


# ---------------------------------------------------------------------------
# helpers built on the primitive set


def norm2(x: Tensor) -> Tensor:
    """Euclidean norm of all elements (zero-safe subgradient at 0)."""
    return sqrt(tensor_sum(square(x)))


def gradients(output: Tensor, inputs: list[Tensor]) -> list[np.ndarray]:
    """Reverse-mode gradients of a scalar output w.r.t. the given inputs."""
    for t in inputs:
        t.grad = None
    output.backward()
    return [np.zeros_like(t.value) if t.grad is None else t.grad for t in inputs]
