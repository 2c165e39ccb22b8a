"""Incompressible Neo-Hookean kinematics and stress on the reference frame.

With scaled displacements and coordinates, the deformation gradient is

    F = I + (u_c / l_c) * d(ubar)/d(xbar)

and the scaled first Piola-Kirchhoff stress is

    P = -pbar * F^{-T} + F

where ``pbar`` is the network's pressure output acting as an unconstrained
Lagrange multiplier.  The 2D model is plane-strain incompressible: the
in-plane determinant must equal one.  Spatial derivatives of P are assembled
explicitly from the displacement/pressure jets (cofactor and quotient rules),
so the equilibrium residual stays differentiable with respect to the
parameters through the tape.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elastic import StressState
from .jets import Jets
from .scaling import ScaleSet
from .tape import TapeError, Var, add, div, mul, neg, pluck, sub

__all__ = [
    "Deformation",
    "SingularDeformationError",
    "deformation_gradient",
    "pk1_stress",
    "incompressibility_residual",
    "hyper_pde_residual",
]

_DET_FLOOR = 1e-8


class SingularDeformationError(ValueError):
    """|det F| fell below the invertibility floor at some sample point."""


@dataclass
class Deformation:
    """Per-point deformation gradient, determinant, and F-derivatives."""

    dim: int
    F: list[list[Var]]
    det: Var
    dF: list[list[list[Var]]] | None = None
    coords: np.ndarray | None = None


def deformation_gradient(
    jets: Jets,
    scales: ScaleSet,
    coords: np.ndarray | None = None,
    need_derivatives: bool = True,
) -> Deformation:
    """F = I + (u_c/l_c) * grad(ubar) from the displacement jets.

    ``jets`` must hold at least the displacement components as outputs 0..d-1;
    extra outputs (the pressure head) are ignored here.
    """
    if jets.grad is None:
        raise TapeError("deformation gradient needs first input derivatives")
    d = jets.dim
    if d != 2:
        raise TapeError("hyperelastic model is implemented for 2D (plane strain)")
    k = scales.u_c / scales.l_c

    F: list[list[Var]] = [[None] * d for _ in range(d)]
    for i in range(d):
        for j in range(d):
            gij = pluck(jets.grad, (j, slice(None), i))
            F[i][j] = add(mul(gij, k), 1.0 if i == j else 0.0)
    det = sub(mul(F[0][0], F[1][1]), mul(F[0][1], F[1][0]))

    dF = None
    if need_derivatives:
        hess = jets.require_hess("deformation gradient derivatives")
        dF = [[[None] * d for _ in range(d)] for _ in range(d)]
        for i in range(d):
            for j in range(d):
                for m in range(d):
                    hij = pluck(hess, (j, m, slice(None), i))
                    dF[i][j][m] = mul(hij, k)
    return Deformation(d, F, det, dF, coords)


def incompressibility_residual(defm: Deformation) -> Var:
    """det F - 1, one scalar per point."""
    return sub(defm.det, 1.0)


def _check_invertible(defm: Deformation) -> None:
    detv = defm.det.value
    bad = np.abs(detv) <= _DET_FLOOR
    if np.any(bad):
        idx = int(np.argmax(bad))
        where = ""
        if defm.coords is not None:
            where = f" at point {np.asarray(defm.coords)[idx]}"
        raise SingularDeformationError(
            f"det F = {detv[idx]:.3e}{where} (floor {_DET_FLOOR:g}); "
            "deformation is not invertible"
        )


def pk1_stress(defm: Deformation, pbar: Var, dpbar: list[Var] | None = None) -> StressState:
    """Scaled first Piola-Kirchhoff stress -pbar * F^{-T} + F.

    ``dpbar`` (spatial pressure gradient components) is required whenever the
    deformation carries derivatives, since d(P)/dx propagates through the
    inverse transpose via the cofactor representation
    F^{-T} = cof(F) / det F.
    """
    _check_invertible(defm)
    a, b = defm.F[0][0], defm.F[0][1]
    c, e = defm.F[1][0], defm.F[1][1]
    det = defm.det
    q = div(pbar, det)  # pbar / det

    # cof(F)^T / det entries: F^{-T} = [[e, -c], [-b, a]] / det
    P = [[None, None], [None, None]]
    P[0][0] = sub(a, mul(q, e))
    P[0][1] = add(b, mul(q, c))
    P[1][0] = add(c, mul(q, b))
    P[1][1] = sub(e, mul(q, a))

    if defm.dF is None:
        return StressState(2, P)
    if dpbar is None:
        raise TapeError("pk1_stress needs the pressure gradient to assemble "
                        "stress derivatives")

    dF = defm.dF
    dP = [[[None] * 2 for _ in range(2)] for _ in range(2)]
    for m in range(2):
        da, db = dF[0][0][m], dF[0][1][m]
        dc, de = dF[1][0][m], dF[1][1][m]
        ddet = sub(add(mul(da, e), mul(a, de)), add(mul(db, c), mul(b, dc)))
        # dq = dpbar/det - q * ddet/det
        dq = sub(div(dpbar[m], det), mul(q, div(ddet, det)))
        dP[0][0][m] = sub(da, add(mul(dq, e), mul(q, de)))
        dP[0][1][m] = add(db, add(mul(dq, c), mul(q, dc)))
        dP[1][0][m] = add(dc, add(mul(dq, b), mul(q, db)))
        dP[1][1][m] = sub(de, add(mul(dq, a), mul(q, da)))
    return StressState(2, P, dP)


def hyper_pde_residual(state: StressState) -> list[Var]:
    """Reference-configuration divergence of the PK1 stress."""
    if state.dsigma is None:
        raise TapeError("PK1 state carries no derivatives")
    out = []
    for i in range(state.dim):
        r = state.dsigma[i][0][0]
        for j in range(1, state.dim):
            r = add(r, state.dsigma[i][j][j])
        out.append(r)
    return out
