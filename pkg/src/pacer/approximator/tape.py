"""Array-level reverse-mode differentiation.

A :class:`Tape` records every primitive applied to values that depend on a
watched parameter vector. Each record keeps a vector-Jacobian closure, so a
single reverse sweep returns the gradient of a scalar (or of ``adjoint . output``
for a non-scalar output) with respect to every watched vector.

Values that do not depend on anything watched are plain constants and cost
nothing to backpropagate through.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import UsageError


class Var:
    """A value produced on (or outside of) a tape.

    ``tape is None`` marks a constant.
    """

    __slots__ = ("value", "tape", "index")
    __array_priority__ = 100

    def __init__(self, value, tape: "Tape | None" = None, index: int = -1):
        self.value = np.asarray(value, dtype=np.float64)
        self.tape = tape
        self.index = index

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __repr__(self):
        kind = "const" if self.tape is None else f"node {self.index}"
        return f"Var({kind}, shape={self.value.shape})"

    def __float__(self):
        return float(self.value)

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

    def __getitem__(self, key):
        return getitem(self, key)

    @property
    def T(self):
        return swapaxes(self, -1, -2)


class _Node:
    __slots__ = ("inputs", "vjp", "needs")

    def __init__(self, inputs, vjp, needs):
        self.inputs = inputs
        self.vjp = vjp
        self.needs = needs


class Tape:
    """Records operations for one forward/backward pair.

    Parameter vectors enter through :meth:`watch`. Vectors passed to
    :meth:`stop` are treated as constants even when a forward function asks
    to watch them, and their gradients come back as exact zeros.
    """

    def __init__(self):
        self.nodes: list[_Node] = []
        self._watched: dict[int, tuple[object, Var]] = {}
        self._stopped: dict[int, object] = {}
        self._layer_cache: dict[tuple[int, str], Var] = {}

    def __len__(self):
        return len(self.nodes)

    def _record(self, value, inputs, vjp) -> Var:
        needs = tuple(isinstance(x, Var) and x.tape is self for x in inputs)
        self.nodes.append(_Node(inputs, vjp, needs))
        return Var(value, self, len(self.nodes) - 1)

    def watch(self, params) -> Var:
        """Return the leaf variable for ``params`` (a ParamVector)."""
        key = id(params)
        if key in self._stopped:
            return Var(params.values)
        if key not in self._watched:
            names = {p.name for p, _ in self._watched.values()}
            if params.name in names:
                raise UsageError(f"two watched parameter vectors share the name {params.name!r}")
            self.nodes.append(_Node((), None, ()))
            leaf = Var(params.values, self, len(self.nodes) - 1)
            self._watched[key] = (params, leaf)
        return self._watched[key][1]

    def stop(self, params) -> None:
        """Treat ``params`` as a constant on this tape."""
        if id(params) in self._watched:
            raise UsageError(f"{params.name!r} is already watched")
        self._stopped[id(params)] = params

    def layer(self, params, name: str) -> Var:
        """One named tensor of ``params`` as a differentiable view."""
        key = (id(params), name)
        if key not in self._layer_cache:
            leaf = self.watch(params)
            start, stop, shape = params.slot(name)
            self._layer_cache[key] = _flat_slice(leaf, start, stop, shape)
        return self._layer_cache[key]

    def backward(self, output: Var, adjoint=None) -> dict:
        """Reverse sweep from ``output``.

        Returns a mapping from parameter-vector name to a gradient
        ParamVector holding ``d(adjoint . output)/d params``. Stopped vectors
        map to zero gradients.
        """
        from .mlp import ParamVector

        if not self.nodes:
            raise UsageError("backward called on an empty tape")
        output = output if isinstance(output, Var) else Var(output)
        if adjoint is None:
            adjoint = np.ones_like(output.value)
        adjoint = np.broadcast_to(np.asarray(adjoint, dtype=np.float64), output.shape).copy()

        grads: list = [None] * len(self.nodes)
        if output.tape is self:
            grads[output.index] = adjoint
            for i in range(output.index, -1, -1):
                g = grads[i]
                if g is None:
                    continue
                node = self.nodes[i]
                if node.vjp is None:
                    continue
                parts = node.vjp(g, node.needs)
                for x, need, gx in zip(node.inputs, node.needs, parts):
                    if not need or gx is None:
                        continue
                    j = x.index
                    grads[j] = gx if grads[j] is None else grads[j] + gx
                grads[i] = None if i != output.index else g
        elif output.tape is not None:
            raise UsageError("output was recorded on a different tape")

        out = {}
        for params, leaf in self._watched.values():
            g = grads[leaf.index]
            values = np.zeros_like(params.values) if g is None else np.asarray(g, dtype=np.float64)
            out[params.name] = ParamVector(values, list(params.layout), params.name)
        for params in self._stopped.values():
            out.setdefault(params.name, ParamVector(np.zeros_like(params.values), list(params.layout), params.name))
        return out


def backward(tape: Tape, output: Var, adjoint=None) -> dict:
    """Functional alias of :meth:`Tape.backward`."""
    return tape.backward(output, adjoint)


# ---------------------------------------------------------------------------
# primitives


def _val(x):
    return x.value if isinstance(x, Var) else np.asarray(x, dtype=np.float64)


def _tape_of(inputs):
    for x in inputs:
        if isinstance(x, Var) and x.tape is not None:
            return x.tape
    return None


def _op(value, inputs: Sequence, vjp: Callable) -> Var:
    tape = _tape_of(inputs)
    if tape is None:
        return Var(value)
    for x in inputs:
        if isinstance(x, Var) and x.tape is not None and x.tape is not tape:
            raise UsageError("mixing variables from two tapes")
    return tape._record(value, tuple(inputs), vjp)


def unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` after numpy broadcasting."""
    if g.shape == tuple(shape):
        return g
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def add(a, b) -> Var:
    av, bv = _val(a), _val(b)

    def vjp(g, needs):
        return (unbroadcast(g, av.shape) if needs[0] else None,
                unbroadcast(g, bv.shape) if needs[1] else None)

    return _op(av + bv, (a, b), vjp)


def sub(a, b) -> Var:
    av, bv = _val(a), _val(b)

    def vjp(g, needs):
        return (unbroadcast(g, av.shape) if needs[0] else None,
                unbroadcast(-g, bv.shape) if needs[1] else None)

    return _op(av - bv, (a, b), vjp)


def mul(a, b) -> Var:
    av, bv = _val(a), _val(b)

    def vjp(g, needs):
        return (unbroadcast(g * bv, av.shape) if needs[0] else None,
                unbroadcast(g * av, bv.shape) if needs[1] else None)

    return _op(av * bv, (a, b), vjp)


def div(a, b) -> Var:
    av, bv = _val(a), _val(b)
    out = av / bv

    def vjp(g, needs):
        return (unbroadcast(g / bv, av.shape) if needs[0] else None,
                unbroadcast(-g * out / bv, bv.shape) if needs[1] else None)

    return _op(out, (a, b), vjp)


def neg(a) -> Var:
    return _op(-_val(a), (a,), lambda g, needs: (-g,))


def matmul(a, b) -> Var:
    """Matrix product with numpy batching rules (inputs of rank >= 2)."""
    av, bv = _val(a), _val(b)

    def vjp(g, needs):
        ga = unbroadcast(g @ np.swapaxes(bv, -1, -2), av.shape) if needs[0] else None
        gb = unbroadcast(np.swapaxes(av, -1, -2) @ g, bv.shape) if needs[1] else None
        return ga, gb

    return _op(av @ bv, (a, b), vjp)


def affine(x, w, b) -> Var:
    """``x @ w + b`` as one node."""
    xv, wv, bv = _val(x), _val(w), _val(b)

    def vjp(g, needs):
        gx = g @ wv.T if needs[0] else None
        gw = unbroadcast(np.swapaxes(xv, -1, -2) @ g, wv.shape) if needs[1] else None
        gb = unbroadcast(g, bv.shape) if needs[2] else None
        return gx, gw, gb

    return _op(xv @ wv + bv, (x, w, b), vjp)


def relu(x) -> Var:
    """Rectifier; the derivative at exactly 0 is taken to be 0."""
    xv = _val(x)
    y = np.maximum(xv, 0.0)
    return _op(y, (x,), lambda g, needs: (g * (xv > 0),))


def tanh(x) -> Var:
    y = np.tanh(_val(x))
    return _op(y, (x,), lambda g, needs: (g * (1.0 - y * y),))


def exp(x) -> Var:
    y = np.exp(_val(x))
    return _op(y, (x,), lambda g, needs: (g * y,))


def square(x) -> Var:
    xv = _val(x)
    return _op(xv * xv, (x,), lambda g, needs: (2.0 * xv * g,))


def sqrt(x) -> Var:
    """Square root; zero inputs get a zero derivative instead of infinity."""
    y = np.sqrt(_val(x))
    safe = np.where(y > 0, y, 1.0)
    return _op(y, (x,), lambda g, needs: (np.where(y > 0, 0.5 * g / safe, 0.0),))


def cos(x) -> Var:
    xv = _val(x)
    return _op(np.cos(xv), (x,), lambda g, needs: (-np.sin(xv) * g,))


def clamp_min(x, lo: float) -> Var:
    xv = _val(x)
    mask = xv > lo
    return _op(np.where(mask, xv, lo), (x,), lambda g, needs: (g * mask,))


def minimum(a, b) -> Var:
    """Elementwise minimum; ties route the gradient to ``a``."""
    av, bv = _val(a), _val(b)
    pick_a = av <= bv

    def vjp(g, needs):
        return (unbroadcast(np.where(pick_a, g, 0.0), av.shape) if needs[0] else None,
                unbroadcast(np.where(pick_a, 0.0, g), bv.shape) if needs[1] else None)

    return _op(np.minimum(av, bv), (a, b), vjp)


def sum(x, axis=None, keepdims=False) -> Var:  # noqa: A001
    xv = _val(x)

    def vjp(g, needs):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, xv.shape).copy(),)

    return _op(xv.sum(axis=axis, keepdims=keepdims), (x,), vjp)


def mean(x, axis=None, keepdims=False) -> Var:
    xv = _val(x)
    n = xv.size if axis is None else np.prod([xv.shape[a] for a in np.atleast_1d(axis)])
    return sum(x, axis=axis, keepdims=keepdims) * (1.0 / n)


def reshape(x, shape) -> Var:
    xv = _val(x)
    return _op(xv.reshape(shape), (x,), lambda g, needs: (g.reshape(xv.shape),))


def swapaxes(x, a1, a2) -> Var:
    xv = _val(x)
    return _op(np.swapaxes(xv, a1, a2), (x,), lambda g, needs: (np.swapaxes(g, a1, a2),))


def concat(xs: Sequence, axis: int = -1) -> Var:
    vals = [_val(x) for x in xs]
    sizes = [v.shape[axis] for v in vals]
    cuts = np.cumsum(sizes)[:-1]

    def vjp(g, needs):
        parts = np.split(g, cuts, axis=axis)
        return tuple(p if n else None for p, n in zip(parts, needs))

    return _op(np.concatenate(vals, axis=axis), tuple(xs), vjp)


def getitem(x, key) -> Var:
    xv = _val(x)

    def vjp(g, needs):
        out = np.zeros_like(xv)
        np.add.at(out, key, g)
        return (out,)

    return _op(xv[key], (x,), vjp)


def _flat_slice(flat: Var, start: int, stop: int, shape) -> Var:
    n = flat.value.shape[0]

    def vjp(g, needs):
        out = np.zeros(n)
        out[start:stop] = g.reshape(-1)
        return (out,)

    return _op(flat.value[start:stop].reshape(shape), (flat,), vjp)


def quantile_huber(delta, tau, kappa: float) -> Var:
    """Elementwise asymmetric Huber quantile penalty.

    ``|tau - 1{delta < 0}| * huber_kappa(delta)`` where ``huber_kappa`` is
    ``delta**2 / (2 kappa)`` inside ``[-kappa, kappa]`` and
    ``|delta| - kappa / 2`` outside. ``tau`` broadcasts against ``delta`` and
    is never differentiated.
    """
    dv = _val(delta)
    w = np.abs(_val(tau) - (dv < 0.0))
    ad = np.abs(dv)
    inside = ad <= kappa
    h = np.where(inside, 0.5 * dv * dv / kappa, ad - 0.5 * kappa)
    dh = np.clip(dv, -kappa, kappa) / kappa
    return _op(w * h, (delta,), lambda g, needs: (g * w * dh,))
