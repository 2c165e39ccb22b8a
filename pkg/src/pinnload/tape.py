"""Reverse-mode automatic differentiation on an explicit operation trace.

Every intermediate quantity is a :class:`Var` holding a float64 numpy array
(scalars are 0-d arrays).  Operations append records to an append-only
:class:`Tape`; each record stores its input/output nodes together with a
backward closure that maps output adjoints to input adjoints (a
vector-Jacobian product).  Because records are replayed strictly in reverse
creation order and adjoints are accumulated with plain ``+``, a sweep over a
fixed trace is deterministic: identical traces give bit-identical gradients.

The trace is rebuilt from scratch for every loss evaluation (one per training
epoch).  A trace is written by a single thread and is read-only during the
reverse sweep.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "Tape",
    "TapeError",
    "Var",
    "gradients",
    "reverse_grad",
    "trace_scalar",
]


class TapeError(ValueError):
    """Raised for malformed traces: mixed tapes, non-scalar seeds, bad shapes."""


class Var:
    """One node on the trace: a value plus its position in creation order.

    Constant nodes participate in forward arithmetic but never receive
    adjoints; leaves (non-constant nodes without a producing record) are the
    differentiable parameters.
    """

    __slots__ = ("tape", "value", "index", "constant")

    # Refuse silent numpy coercion: ``np.sin(var)`` etc. must fail loudly
    # instead of producing an untracked array.
    __array_ufunc__ = None

    def __init__(self, tape: "Tape", value: np.ndarray, index: int, constant: bool):
        self.tape = tape
        self.value = value
        self.index = index
        self.constant = constant

    @property
    def shape(self) -> tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    def item(self) -> float:
        return float(self.value)

    def __repr__(self) -> str:
        kind = "const" if self.constant else "node"
        return f"Var({kind} #{self.index}, shape={self.shape})"

    def __bool__(self) -> bool:
        raise TapeError("Var cannot be used in boolean context; use .value")

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_lift(self.tape, other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __truediv__(self, other):
        return div(self, _lift(self.tape, other))

    def __rtruediv__(self, other):
        return div(_lift(self.tape, other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, exponent):
        return powc(self, exponent)


class Tape:
    """Append-only trace of operations, in topological (creation) order."""

    def __init__(self) -> None:
        self._records: list[tuple[tuple, tuple, Callable]] = []
        self._n_vars = 0
        self.leaves: list[Var] = []

    def __len__(self) -> int:
        return len(self._records)

    @property
    def n_nodes(self) -> int:
        return self._n_vars

    def leaf(self, value, constant: bool = False) -> Var:
        """Create an input node.  Non-constant leaves are the parameters."""
        arr = np.asarray(value, dtype=np.float64)
        var = Var(self, arr, self._n_vars, constant)
        self._n_vars += 1
        if not constant:
            self.leaves.append(var)
        return var

    def record(
        self,
        inputs: Sequence[Var],
        out_values: Sequence[np.ndarray],
        backward: Callable,
    ) -> tuple[Var, ...]:
        """Append one operation; ``backward(*out_adjoints)`` must return one
        adjoint (or None) per input, in order."""
        outs = []
        for val in out_values:
            outs.append(Var(self, np.asarray(val, dtype=np.float64), self._n_vars, False))
            self._n_vars += 1
        self._records.append((tuple(inputs), tuple(outs), backward))
        return tuple(outs)


def _lift(tape: Tape, x) -> Var:
    if isinstance(x, Var):
        if x.tape is not tape:
            raise TapeError("operands recorded on different tapes")
        return x
    return tape.leaf(x, constant=True)


def _pair(a, b) -> tuple[Var, Var]:
    if isinstance(a, Var):
        return a, _lift(a.tape, b)
    if isinstance(b, Var):
        return _lift(b.tape, a), b
    raise TapeError("at least one operand must be a Var")


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum an adjoint down to the shape of the operand it belongs to."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, (gs, s) in enumerate(zip(g.shape, shape)) if s == 1 and gs != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# ---------------------------------------------------------------------------
# primitive operations
# ---------------------------------------------------------------------------


def add(a, b) -> Var:
    a, b = _pair(a, b)
    sa, sb = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, sa), _unbroadcast(g, sb)

    return a.tape.record((a, b), (a.value + b.value,), backward)[0]


def sub(a, b) -> Var:
    a, b = _pair(a, b)
    sa, sb = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, sa), _unbroadcast(-g, sb)

    return a.tape.record((a, b), (a.value - b.value,), backward)[0]


def mul(a, b) -> Var:
    a, b = _pair(a, b)
    va, vb = a.value, b.value

    def backward(g):
        return _unbroadcast(g * vb, va.shape), _unbroadcast(g * va, vb.shape)

    return a.tape.record((a, b), (va * vb,), backward)[0]


def div(a, b) -> Var:
    a, b = _pair(a, b)
    va, vb = a.value, b.value
    out = va / vb

    def backward(g):
        return _unbroadcast(g / vb, va.shape), _unbroadcast(-g * out / vb, vb.shape)

    return a.tape.record((a, b), (out,), backward)[0]


def neg(a: Var) -> Var:
    def backward(g):
        return (-g,)

    return a.tape.record((a,), (-a.value,), backward)[0]


def powc(a: Var, exponent) -> Var:
    """Power with a constant (non-traced) exponent."""
    p = float(exponent)
    va = a.value

    def backward(g):
        return (g * p * va ** (p - 1.0),)

    return a.tape.record((a,), (va**p,), backward)[0]


def exp(a: Var) -> Var:
    out = np.exp(a.value)

    def backward(g):
        return (g * out,)

    return a.tape.record((a,), (out,), backward)[0]


def log(a: Var) -> Var:
    va = a.value

    def backward(g):
        return (g / va,)

    return a.tape.record((a,), (np.log(va),), backward)[0]


def tanh(a: Var) -> Var:
    out = np.tanh(a.value)

    def backward(g):
        return (g * (1.0 - out * out),)

    return a.tape.record((a,), (out,), backward)[0]


def asum(a: Var) -> Var:
    """Sum of all elements (fixed left-to-right pairwise numpy order)."""
    shape = a.shape

    def backward(g):
        return (np.broadcast_to(g, shape),)

    return a.tape.record((a,), (a.value.sum(),), backward)[0]


def mean_sq(a: Var, mask: np.ndarray | None = None) -> Var:
    """``sum(mask * a**2) / N`` with ``N = a.shape[0]`` (the point count).

    This is the mean over sample points of the squared residual, summed over
    any trailing component axes.  ``mask`` silences entries (e.g. unobserved
    displacement components) without changing the point-count normalization.
    """
    va = a.value
    n = va.shape[0]
    if n == 0:
        raise TapeError("mean_sq over an empty point set")
    if mask is None:
        out = np.sum(va * va) / n
    else:
        out = np.sum(va * va * mask) / n

    def backward(g):
        scale = 2.0 * g / n
        if mask is None:
            return (scale * va,)
        return (scale * va * mask,)

    return a.tape.record((a,), (out,), backward)[0]


def row_sq(a: Var) -> Var:
    """Per-point squared norm: sum of squares over trailing axes -> (N,)."""
    va = a.value
    tail = tuple(range(1, va.ndim))

    def backward(g):
        return (2.0 * g.reshape(g.shape + (1,) * (va.ndim - 1)) * va,)

    return a.tape.record((a,), (np.sum(va * va, axis=tail),), backward)[0]


def pluck(a: Var, key: tuple) -> Var:
    """Extract a sub-array; the backward pass scatters into zeros."""
    shape = a.shape

    def backward(g):
        z = np.zeros(shape)
        z[key] = g
        return (z,)

    return a.tape.record((a,), (a.value[key],), backward)[0]


def dot_wt(x: Var, w: Var) -> Var:
    """``x @ w.T`` over the last axis of ``x``; leading axes are batched.

    Used for propagating values/input-gradients/input-Hessians through an
    affine layer: ``x`` of shape ``(..., N, fan_in)``, ``w`` of shape
    ``(fan_out, fan_in)``.
    """
    x, w = _pair(x, w)
    xv, wv = x.value, w.value
    if xv.shape[-1] != wv.shape[1]:
        raise TapeError(
            f"dot_wt shape mismatch: operand has {xv.shape[-1]} columns, "
            f"weight expects {wv.shape[1]}"
        )

    def backward(g):
        dx = np.matmul(g, wv)
        dw = np.matmul(
            g.reshape(-1, g.shape[-1]).T, xv.reshape(-1, xv.shape[-1])
        )
        return dx, dw

    return x.tape.record((x, w), (np.matmul(xv, wv.T),), backward)[0]


# ---------------------------------------------------------------------------
# differentiation entry points
# ---------------------------------------------------------------------------


def gradients(seed: Var, wrt: Sequence[Var]) -> list[np.ndarray]:
    """Adjoints of ``wrt`` for a scalar ``seed`` via one reverse sweep.

    Returns one array per entry of ``wrt`` (zeros when no path exists).
    """
    if seed.size != 1:
        raise TapeError(f"reverse sweep needs a scalar seed, got shape {seed.shape}")
    tape = seed.tape
    for v in wrt:
        if v.tape is not tape:
            raise TapeError("wrt variable is not on the seed's tape")
    adjoints: dict[int, np.ndarray] = {seed.index: np.ones_like(seed.value)}
    for inputs, outputs, backward in reversed(tape._records):
        outs = [adjoints.pop(o.index, None) for o in outputs]
        if all(o is None for o in outs):
            continue
        in_grads = backward(*outs)
        for var, g in zip(inputs, in_grads):
            if g is None or var.constant:
                continue
            prev = adjoints.get(var.index)
            adjoints[var.index] = g if prev is None else prev + g
    return [adjoints.get(v.index, np.zeros_like(v.value)) for v in wrt]


def reverse_grad(tape: Tape, seed: Var, wrt: Sequence[Var] | None = None) -> list[np.ndarray]:
    """Adjoints of every (or the given) non-constant leaf of ``tape``."""
    if seed.tape is not tape:
        raise TapeError("seed is not a node of this tape")
    return gradients(seed, tape.leaves if wrt is None else wrt)


def trace_scalar(program: Callable, inputs: Iterable[float]) -> tuple[Tape, Var]:
    """Trace ``program`` applied to scalar leaf variables.

    The program may only use the primitives defined in this module (plain
    arithmetic plus tanh/exp/log); anything else fails at construction time
    because Var defines no other operations.
    """
    tape = Tape()
    leaves = [tape.leaf(x) for x in inputs]
    out = program(*leaves)
    if not isinstance(out, Var):
        raise TapeError("program did not return a traced value")
    return tape, out
