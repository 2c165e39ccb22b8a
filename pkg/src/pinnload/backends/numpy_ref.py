"""Pure-numpy reference implementation of the hot jet-propagation kernels.

Jets are stored batch-major for GEMM-friendly layouts:

* value      ``(N, w)``
* gradient   ``(d, N, w)``      -- d spatial input directions
* Hessian    ``(d, d, N, w)``   -- symmetric in the two leading axes

The tanh kernels below dominate the elementwise cost of an epoch; the
compiled extension fuses them into single passes with identical arithmetic.
"""

from __future__ import annotations

import numpy as np


def tanh_jet_fwd(v, g, h):
    """Propagate (value, grad, hess) through elementwise tanh.

    ``h`` may be None when only first input derivatives are tracked.
    Returns ``(t, g2, h2)`` with ``t = tanh(v)``.
    """
    t = np.tanh(v)
    tp = 1.0 - t * t
    g2 = tp * g
    if h is None:
        return t, g2, None
    tpp = -2.0 * t * tp
    h2 = tp * h + tpp * (g[:, None] * g[None, :])
    return t, g2, h2


def tanh_jet_bwd(t, g, h, dt, dg2, dh2):
    """Adjoints of tanh_jet_fwd.

    ``t`` is the forward output, ``g``/``h`` the forward inputs; any of the
    output adjoints may be None.  Returns ``(dv, dg, dh)``.
    """
    tp = 1.0 - t * t
    tpp = -2.0 * t * tp
    dv = np.zeros_like(t)
    dg = None
    dh = None
    if dt is not None:
        dv += dt * tp
    if dg2 is not None:
        dv += tpp * (dg2 * g).sum(axis=0)
        dg = tp * dg2
    if dh2 is not None:
        outer = g[:, None] * g[None, :]
        tppp = -2.0 * (tp * tp + t * tpp)
        dv += tpp * (dh2 * h).sum(axis=(0, 1)) + tppp * (dh2 * outer).sum(axis=(0, 1))
        sym = dh2 + dh2.transpose(1, 0, 2, 3)
        extra = tpp * (sym * g[None, :]).sum(axis=1)
        dg = extra if dg is None else dg + extra
        dh = tp * dh2
    return dv, dg, dh


def mul_outer_sym_fwd(g, c):
    """``out[a, b] = g[a] * c[b] + g[b] * c[a]`` with constant ``c`` (d, N, w)."""
    return g[:, None] * c[None, :] + g[None, :] * c[:, None]


def mul_outer_sym_bwd(c, gout):
    """Adjoint of mul_outer_sym_fwd with respect to ``g``."""
    sym = gout + gout.transpose(1, 0, 2, 3)
    return (sym * c[None, :]).sum(axis=1)
