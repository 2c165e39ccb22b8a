"""Scaled linear-elastic stress, equilibrium residual and traction residuals.

The dimensionless stress is

    sigma_ij = shear_scale * [ ratio * div(u) * delta_ij + du_i/dx_j + du_j/dx_i ]

with ``ratio`` the (effective) Lame ratio lambda/mu.  ``shear_scale`` is 1 in
scaled runs; raw-unit runs pass ``mu`` so that the same assembly produces the
physical Cauchy stress.  All operators are linear in the displacement jets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jets import Jets
from .tape import TapeError, Var, add, mul, pluck, sub

__all__ = ["StressState", "stress", "pde_residual", "traction_residual"]

_NORMAL_TOL = 1e-12


@dataclass
class StressState:
    """Symmetric stress components and (optionally) their spatial derivatives.

    ``sigma[i][j]`` and ``sigma[j][i]`` are the same tape node, so symmetry
    is exact by construction.  ``dsigma[i][j][k]`` holds d sigma_ij / d x_k.
    """

    dim: int
    sigma: list[list[Var]]
    dsigma: list[list[list[Var]]] | None = None


def _disp_grad(jets: Jets) -> list[list[Var]]:
    """G[i][j] = d u_i / d x_j as individual tape nodes."""
    d = jets.dim
    return [
        [pluck(jets.grad, (j, slice(None), i)) for j in range(d)]
        for i in range(d)
    ]


def _disp_hess(jets: Jets) -> list[list[list[Var]]]:
    """H[i][j][k] = d2 u_i / (d x_j d x_k), symmetric in (j, k)."""
    d = jets.dim
    hess = jets.require_hess("stress derivative assembly")
    out: list[list[list[Var]]] = [[[None] * d for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(d):
            for k in range(j, d):
                node = pluck(hess, (j, k, slice(None), i))
                out[i][j][k] = node
                out[i][k][j] = node
    return out


def stress(
    jets: Jets,
    ratio: float,
    shear_scale: float = 1.0,
    need_derivatives: bool = True,
) -> StressState:
    """Assemble the dimensionless stress tensor from displacement jets."""
    if jets.grad is None:
        raise TapeError("stress needs first input derivatives (order >= 1)")
    d = jets.dim
    if jets.n_outputs != d:
        raise TapeError(
            f"elastic stress expects {d} displacement outputs, got {jets.n_outputs}"
        )
    g = _disp_grad(jets)
    div = g[0][0]
    for i in range(1, d):
        div = add(div, g[i][i])

    sigma: list[list[Var]] = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(i, d):
            s = add(g[i][j], g[j][i])
            if i == j:
                s = add(s, mul(div, ratio))
            if shear_scale != 1.0:
                s = mul(s, shear_scale)
            sigma[i][j] = s
            sigma[j][i] = s

    if not need_derivatives:
        return StressState(d, sigma)

    h = _disp_hess(jets)
    ddiv = [h[0][0][k] for k in range(d)]
    for k in range(d):
        for i in range(1, d):
            ddiv[k] = add(ddiv[k], h[i][i][k])

    dsigma: list[list[list[Var]]] = [[[None] * d for _ in range(d)] for _ in range(d)]
    for i in range(d):
        for j in range(i, d):
            for k in range(d):
                s = add(h[i][j][k], h[j][i][k])
                if i == j:
                    s = add(s, mul(ddiv[k], ratio))
                if shear_scale != 1.0:
                    s = mul(s, shear_scale)
                dsigma[i][j][k] = s
                dsigma[j][i][k] = s
    return StressState(d, sigma, dsigma)


def pde_residual(state: StressState) -> list[Var]:
    """Divergence of the stress, one residual component per direction."""
    if state.dsigma is None:
        raise TapeError("stress state carries no derivatives; "
                        "assemble with need_derivatives=True")
    d = state.dim
    out = []
    for i in range(d):
        r = state.dsigma[i][0][0]
        for j in range(1, d):
            r = add(r, state.dsigma[i][j][j])
        out.append(r)
    return out


def traction_residual(
    state: StressState,
    normals: np.ndarray,
    target: list | None = None,
) -> list[Var]:
    """``sigma . N - target`` per component; ``target=None`` means free surface."""
    normals = np.asarray(normals, dtype=np.float64)
    d = state.dim
    if normals.ndim != 2 or normals.shape[1] != d:
        raise ValueError(f"normals must be (N, {d}), got {normals.shape}")
    lengths = np.linalg.norm(normals, axis=1)
    bad = np.abs(lengths - 1.0) > _NORMAL_TOL
    if np.any(bad):
        raise ValueError(
            f"{int(bad.sum())} boundary normals deviate from unit length by more "
            f"than {_NORMAL_TOL:g} (max |1 - |N|| = {np.abs(lengths - 1).max():.3e})"
        )
    out = []
    for i in range(d):
        t = mul(state.sigma[i][0], normals[:, 0])
        for j in range(1, d):
            t = add(t, mul(state.sigma[i][j], normals[:, j]))
        if target is not None and target[i] is not None:
            t = sub(t, target[i])
        out.append(t)
    return out
