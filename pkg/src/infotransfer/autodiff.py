"""Reverse-mode automatic differentiation over a recorded computation.

A ``Tensor`` wraps a float64 numpy array and remembers how it was produced.
Backward rules are themselves expressed with ``Tensor`` operations, so the
adjoints form a differentiable graph: calling :func:`grad` with
``create_graph=True`` and differentiating a function of the result gives exact
second-order derivatives (double backpropagation).

Gradients accumulate by summation in deterministic node order, and every node
also records a pure forward rule so a graph can be replayed on fresh inputs
(:func:`replay_forward`).
"""

from __future__ import annotations

import numpy as np


class AutodiffError(RuntimeError):
    pass


class Tensor:
    """Node in the computation record: value, parents, backward and forward rules."""

    __slots__ = ("data", "parents", "op", "_vjp", "_fwd")

    def __init__(self, data, parents=(), op="leaf", vjp=None, fwd=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.parents = tuple(parents)
        self.op = op
        self._vjp = vjp  # upstream Tensor -> tuple of parent adjoint Tensors
        self._fwd = fwd  # tuple of parent arrays -> array

    @property
    def shape(self):
        return self.data.shape

    def __repr__(self):
        return f"Tensor(op={self.op!r}, shape={self.data.shape})"

    # -- operator sugar -------------------------------------------------
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return add(self, neg(other))

    def __rsub__(self, other):
        return add(other, neg(self))

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(other, self)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __pow__(self, exponent):
        return power(self, exponent)

    def __truediv__(self, other):
        return mul(self, power(as_tensor(other), -1.0))


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def constant(value) -> Tensor:
    """Leaf treated as a constant (no special flag needed: leaves have no parents)."""
    return Tensor(value)


def _unbroadcast(adjoint: Tensor, shape: tuple) -> Tensor:
    """Sum an adjoint down to `shape` after numpy broadcasting."""
    extra = adjoint.data.ndim - len(shape)
    for _ in range(extra):
        adjoint = tsum(adjoint, axis=0)
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and adjoint.data.shape[i] != 1)
    if axes:
        adjoint = tsum(adjoint, axis=axes, keepdims=True)
    return adjoint


# -- primitives ---------------------------------------------------------

def add(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data + b.data, (a, b), "add",
                  vjp=lambda g: (_unbroadcast(g, a.shape), _unbroadcast(g, b.shape)),
                  fwd=lambda va, vb: va + vb)


def neg(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(-a.data, (a,), "neg",
                  vjp=lambda g: (neg(g),),
                  fwd=lambda va: -va)


def mul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data * b.data, (a, b), "mul",
                  vjp=lambda g: (_unbroadcast(mul(g, b), a.shape),
                                 _unbroadcast(mul(g, a), b.shape)),
                  fwd=lambda va, vb: va * vb)


def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    return Tensor(a.data @ b.data, (a, b), "matmul",
                  vjp=lambda g: (matmul(g, transpose(b)), matmul(transpose(a), g)),
                  fwd=lambda va, vb: va @ vb)


def transpose(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(a.data.T, (a,), "transpose",
                  vjp=lambda g: (transpose(g),),
                  fwd=lambda va: va.T)


def reshape(a, shape) -> Tensor:
    a = as_tensor(a)
    old = a.shape
    return Tensor(a.data.reshape(shape), (a,), "reshape",
                  vjp=lambda g: (reshape(g, old),),
                  fwd=lambda va: va.reshape(shape))


def power(a, exponent: float) -> Tensor:
    a = as_tensor(a)
    e = float(exponent)
    return Tensor(a.data ** e, (a,), "power",
                  vjp=lambda g: (mul(g, mul(e, power(a, e - 1.0))),),
                  fwd=lambda va: va ** e)


def texp(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.exp(a.data), (a,), "exp", fwd=np.exp)
    out._vjp = lambda g: (mul(g, out),)
    return out


def tlog(a) -> Tensor:
    a = as_tensor(a)
    return Tensor(np.log(a.data), (a,), "log",
                  vjp=lambda g: (mul(g, power(a, -1.0)),),
                  fwd=np.log)


def tanh(a) -> Tensor:
    a = as_tensor(a)
    out = Tensor(np.tanh(a.data), (a,), "tanh", fwd=np.tanh)
    out._vjp = lambda g: (mul(g, 1.0 - mul(out, out)),)
    return out


def relu(a) -> Tensor:
    a = as_tensor(a)
    mask = (a.data > 0).astype(np.float64)  # subgradient 0 at the kink
    return Tensor(a.data * mask, (a,), "relu",
                  vjp=lambda g: (mul(g, constant(mask)),),
                  fwd=lambda va: np.maximum(va, 0.0))


def softplus(a) -> Tensor:
    a = as_tensor(a)
    value = np.logaddexp(0.0, a.data)
    # d softplus = sigmoid, written via tanh to stay overflow-free on the tape
    return Tensor(value, (a,), "softplus",
                  vjp=lambda g: (mul(g, 0.5 * (tanh(mul(0.5, a)) + 1.0)),),
                  fwd=lambda va: np.logaddexp(0.0, va))


def clamp(a, lo: float, hi: float) -> Tensor:
    """Clip values to [lo, hi]; gradient is zero outside the active range."""
    a = as_tensor(a)
    mask = ((a.data >= lo) & (a.data <= hi)).astype(np.float64)
    return Tensor(np.clip(a.data, lo, hi), (a,), "clamp",
                  vjp=lambda g: (mul(g, constant(mask)),),
                  fwd=lambda va: np.clip(va, lo, hi))


def tsum(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    shape = a.shape

    def _vjp(g):
        gd = g
        if axis is not None and not keepdims:
            kshape = list(shape)
            for ax in (axis if isinstance(axis, tuple) else (axis,)):
                kshape[ax] = 1
            gd = reshape(gd, tuple(kshape))
        return (mul(gd, constant(np.ones(shape))),)

    return Tensor(a.data.sum(axis=axis, keepdims=keepdims), (a,), "sum",
                  vjp=_vjp, fwd=lambda va: va.sum(axis=axis, keepdims=keepdims))


def tmean(a, axis=None, keepdims=False) -> Tensor:
    a = as_tensor(a)
    n = a.data.size if axis is None else np.prod(
        [a.shape[ax] for ax in (axis if isinstance(axis, tuple) else (axis,))])
    return mul(tsum(a, axis=axis, keepdims=keepdims), 1.0 / float(n))


def dot(a, b) -> Tensor:
    """Inner product of equal-shape tensors."""
    return tsum(mul(a, b))


def permute_rows(a, perm: np.ndarray) -> Tensor:
    """Reorder the leading axis; linear, so the adjoint applies the inverse order."""
    a = as_tensor(a)
    perm = np.asarray(perm)
    inv = np.argsort(perm)
    return Tensor(a.data[perm], (a,), "permute_rows",
                  vjp=lambda g: (permute_rows(g, inv),),
                  fwd=lambda va: va[perm])


def logsumexp_rows(a) -> Tensor:
    """Row-wise log sum exp with a detached max shift (exact value and gradient)."""
    a = as_tensor(a)
    shift = constant(a.data.max(axis=-1, keepdims=True))
    return add(tlog(tsum(texp(a - shift), axis=-1, keepdims=True)), shift)


# -- differentiation ----------------------------------------------------

def _topo_order(output: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack = [(output, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.parents:
            if id(parent) not in seen:
                stack.append((parent, False))
    return order


def grad(output: Tensor, wrt, create_graph: bool = False) -> list[Tensor]:
    """Reverse-mode derivatives of a scalar `output` w.r.t. each tensor in `wrt`.

    With ``create_graph=True`` the returned adjoints remain connected to the
    tape and can be differentiated again.
    """
    if output.data.size != 1:
        raise AutodiffError(f"grad requires a scalar output, got shape {output.shape}")
    order = _topo_order(output)
    adjoints: dict[int, Tensor] = {id(output): constant(np.ones_like(output.data))}
    for node in reversed(order):
        g = adjoints.get(id(node))
        if g is None or node._vjp is None:
            continue
        for parent, pg in zip(node.parents, node._vjp(g)):
            prev = adjoints.get(id(parent))
            adjoints[id(parent)] = pg if prev is None else add(prev, pg)
    results = []
    for t in wrt:
        g = adjoints.get(id(t))
        if g is None:
            g = constant(np.zeros_like(t.data))
        results.append(g if create_graph else constant(g.data))
    return results


def grad_of_grad(inner_output: Tensor, inner_wrt: Tensor,
                 outer_scalar_fn, outer_wrt) -> list[Tensor]:
    """Parameter gradient of a scalar function of an inner gradient.

    ``outer_scalar_fn`` receives the (still-differentiable) gradient of
    ``inner_output`` w.r.t. ``inner_wrt`` and must return a scalar Tensor.
    """
    inner_grad = grad(inner_output, [inner_wrt], create_graph=True)[0]
    outer = outer_scalar_fn(inner_grad)
    if not isinstance(outer, Tensor) or outer.data.size != 1:
        raise AutodiffError("outer_scalar_fn must return a scalar Tensor")
    return grad(outer, outer_wrt)


def finite_diff_check(fn, point: np.ndarray, analytic_grad: np.ndarray,
                      step: float = 1e-5) -> float:
    """Max relative error of `analytic_grad` vs central differences of `fn`."""
    point = np.asarray(point, dtype=np.float64)
    analytic = np.asarray(analytic_grad, dtype=np.float64)
    worst = 0.0
    flat = point.ravel()
    for i in range(flat.size):
        bump = np.zeros_like(flat)
        bump[i] = step
        hi = fn((flat + bump).reshape(point.shape))
        lo = fn((flat - bump).reshape(point.shape))
        fd = (hi - lo) / (2.0 * step)
        an = analytic.ravel()[i]
        worst = max(worst, abs(fd - an) / max(1.0, abs(an)))
    return worst


def replay_forward(output: Tensor, substitutions: dict[int, np.ndarray]) -> np.ndarray:
    """Recompute `output` with some leaves replaced.

    `substitutions` maps ``id(leaf_tensor)`` to its replacement array; shapes
    must match the recorded leaves. Nodes untouched by a substitution replay
    to their recorded values bit-for-bit.
    """
    values: dict[int, np.ndarray] = {}
    for node in _topo_order(output):
        if id(node) in substitutions:
            new = np.asarray(substitutions[id(node)], dtype=np.float64)
            if new.shape != node.data.shape:
                raise AutodiffError(
                    f"substitution shape {new.shape} != recorded {node.data.shape}")
            values[id(node)] = new
        elif not node.parents:
            values[id(node)] = node.data
        else:
            values[id(node)] = node._fwd(*(values[id(p)] for p in node.parents))
    return values[id(output)]
