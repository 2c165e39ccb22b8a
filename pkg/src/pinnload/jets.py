"""Forward propagation of input derivatives ("jets") through an MLP.

For each network output we track, alongside its value, the gradient and the
Hessian with respect to the *spatial inputs*.  The jets are propagated layer
by layer (value / gradient / Hessian recursions through affine maps and
tanh), and every jet component is itself a node on the parameter tape, so any
scalar assembled from jets can be reverse-differentiated with respect to the
network weights.  This gives second input derivatives with one forward pass
and predictable memory for the small spatial dimensions (2 or 3) used here.

Batch layout (N points, w units, d spatial inputs):

* value   ``(N, w)``
* grad    ``(d, N, w)``     with ``grad[k][n, i] = d out_i / d x_k``
* hess    ``(d, d, N, w)``  symmetric in the leading axes
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backends
from .tape import Tape, TapeError, Var, add, dot_wt, pluck

__all__ = ["Jets", "jet_forward", "constant_jets", "tanh_jets", "sym_outer"]


@dataclass
class Jets:
    """Batched values + input derivatives of a vector field, on a tape."""

    value: Var
    grad: Var | None = None
    hess: Var | None = None

    @property
    def n_points(self) -> int:
        return self.value.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.value.shape[1]

    @property
    def dim(self) -> int:
        if self.grad is None:
            raise TapeError("jets carry no input gradient")
        return self.grad.shape[0]

    def require_hess(self, context: str) -> Var:
        if self.hess is None:
            raise TapeError(f"{context} needs second input derivatives; "
                            "evaluate jets with order=2")
        return self.hess

    def value_at(self, n: int) -> np.ndarray:
        return self.value.value[n]

    def grad_at(self, n: int) -> np.ndarray:
        """(n_outputs, dim) input gradient of point n."""
        return self.grad.value[:, n, :].T

    def hess_at(self, n: int, output: int) -> np.ndarray:
        """(dim, dim) input Hessian of one output component at point n."""
        return self.hess.value[:, :, n, output]


def tanh_jets(value: Var, grad: Var, hess: Var | None):
    """Elementwise tanh applied to a jet triple (fused backend kernel)."""
    tape = value.tape
    t, g2, h2 = backends.tanh_jet_fwd(
        value.value, grad.value, None if hess is None else hess.value
    )
    gval, hval = grad.value, None if hess is None else hess.value

    if hess is None:

        def backward(dt, dg2):
            dv, dg, _ = backends.tanh_jet_bwd(t, gval, None, dt, dg2, None)
            return dv, dg

        ov, og = tape.record((value, grad), (t, g2), backward)
        return ov, og, None

    def backward(dt, dg2, dh2):
        return backends.tanh_jet_bwd(t, gval, hval, dt, dg2, dh2)

    return tape.record((value, grad, hess), (t, g2, h2), backward)


def sym_outer(g: Var, c: np.ndarray) -> Var:
    """``out[a,b] = g[a]*c[b] + g[b]*c[a]`` for a constant gradient field c."""
    carr = np.asarray(c, dtype=np.float64)

    def backward(gout):
        return (backends.mul_outer_sym_bwd(carr, gout),)

    return g.tape.record((g,), (backends.mul_outer_sym_fwd(g.value, carr),), backward)[0]


def _seed_jets(tape: Tape, x: Var, order: int) -> Jets:
    n, d = x.value.shape
    value = x
    grad = hess = None
    if order >= 1:
        eye = np.zeros((d, n, d))
        for k in range(d):
            eye[k, :, k] = 1.0
        grad = tape.leaf(eye, constant=True)
    if order >= 2:
        hess = tape.leaf(np.zeros((d, d, n, d)), constant=True)
    return Jets(value, grad, hess)


def jet_forward(
    tape: Tape,
    layers: list[tuple[Var, Var]],
    x,
    order: int = 2,
    activation: str = "tanh",
) -> Jets:
    """Run an affine/tanh layer stack on jets of the inputs.

    ``layers`` is a list of ``(W, b)`` tape variables; the final layer is
    affine with no activation.  ``x`` is an ``(N, d)`` array (lifted as a
    constant) or an existing tape variable.  ``order`` selects how many input
    derivatives to carry: 0 = plain forward, 1 = gradient, 2 = + Hessian.
    """
    if activation != "tanh":
        raise TapeError(
            f"activation {activation!r} lacks the smooth second derivatives "
            "required for jet propagation; only tanh is supported"
        )
    if order not in (0, 1, 2):
        raise TapeError(f"order must be 0, 1 or 2, got {order}")
    if not layers:
        raise TapeError("empty layer stack")
    xv = x if isinstance(x, Var) else tape.leaf(np.asarray(x, dtype=np.float64), constant=True)
    if xv.ndim != 2:
        raise TapeError(f"input must be (N, d), got shape {xv.shape}")
    if xv.shape[1] != layers[0][0].shape[1]:
        raise TapeError(
            f"input dimension {xv.shape[1]} does not match first layer "
            f"fan-in {layers[0][0].shape[1]}"
        )

    jets = _seed_jets(tape, xv, order)
    last = len(layers) - 1
    for li, (w, b) in enumerate(layers):
        value = add(dot_wt(jets.value, w), b)
        grad = dot_wt(jets.grad, w) if jets.grad is not None else None
        hess = dot_wt(jets.hess, w) if jets.hess is not None else None
        if li != last:
            if grad is None:
                value = _tanh_value_only(value)
            else:
                value, grad, hess = tanh_jets(value, grad, hess)
        jets = Jets(value, grad, hess)
    return jets


def _tanh_value_only(value: Var) -> Var:
    from .tape import tanh

    return tanh(value)


def constant_jets(
    tape: Tape,
    value: np.ndarray,
    grad: np.ndarray | None = None,
    hess: np.ndarray | None = None,
) -> Jets:
    """Wrap precomputed (e.g. finite-difference) jet arrays as constants.

    Lets the physics operators run on analytic or numerically differentiated
    fields exactly as they run on network jets.
    """
    return Jets(
        tape.leaf(value, constant=True),
        None if grad is None else tape.leaf(grad, constant=True),
        None if hess is None else tape.leaf(hess, constant=True),
    )


def component(jets: Jets, output: int) -> tuple[Var, list[Var] | None, list[list[Var]] | None]:
    """Split out one output component as (value, [d/dx_k], [[d2/dx_k dx_l]])."""
    val = pluck(jets.value, (slice(None), output))
    if jets.grad is None:
        return val, None, None
    d = jets.dim
    grad = [pluck(jets.grad, (k, slice(None), output)) for k in range(d)]
    if jets.hess is None:
        return val, grad, None
    hess = [
        [pluck(jets.hess, (k, l, slice(None), output)) for l in range(d)]
        for k in range(d)
    ]
    return val, grad, hess
