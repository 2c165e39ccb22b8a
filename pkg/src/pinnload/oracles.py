"""Analytic reference solutions and independent finite-difference checkers.

These serve double duty: they generate synthetic observation data for the
inverse experiments, and they provide paths to verify the physics operators
that never touch the network or the tape-side derivative assembly.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .elastic import stress
from .hyperelastic import deformation_gradient, pk1_stress
from .jets import constant_jets
from .scaling import ScaleSet
from .tape import Tape

__all__ = [
    "cylinder_solution",
    "cylinder_displacement",
    "uniaxial_beam_solution",
    "neo_hookean_uniaxial",
    "neo_hookean_uniaxial_field",
    "fd_residual_check",
    "elastic_stress_values",
    "neo_hookean_stress_values",
]


# ---------------------------------------------------------------------------
# thick cylinder under internal pressure (plane stress)
# ---------------------------------------------------------------------------


def cylinder_solution(r, beta, r_a: float, r_b: float, p: float, e: float, nu: float):
    """Displacements and polar stress components of the pressurized annulus.

    Valid for ``r_a <= r <= r_b``; the radial stress equals ``-p`` on the
    inner edge and vanishes on the outer edge.
    """
    r = np.asarray(r, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    if np.any(r < r_a - 1e-12) or np.any(r > r_b + 1e-12):
        raise ValueError(f"radius outside the annulus [{r_a}, {r_b}]")
    ring = r_a**2 * p / (r_b**2 - r_a**2)
    radial = ring * r / e * (1.0 - nu + (r_b / r) ** 2 * (1.0 + nu))
    u_x = radial * np.cos(beta)
    u_y = radial * np.sin(beta)
    s_rr = ring * (1.0 - (r_b / r) ** 2)
    s_bb = ring * (1.0 + (r_b / r) ** 2)
    s_rb = np.zeros_like(s_rr)
    return u_x, u_y, s_rr, s_bb, s_rb


def cylinder_displacement(coords, r_a: float, r_b: float, p: float, e: float, nu: float):
    """Cartesian displacement field of the annulus at ``coords`` (N, 2)."""
    coords = np.asarray(coords, dtype=np.float64)
    r = np.hypot(coords[:, 0], coords[:, 1])
    beta = np.arctan2(coords[:, 1], coords[:, 0])
    u_x, u_y, *_ = cylinder_solution(r, beta, r_a, r_b, p, e, nu)
    return np.stack([u_x, u_y], axis=1)


# ---------------------------------------------------------------------------
# prismatic bar under uniform tension
# ---------------------------------------------------------------------------


def uniaxial_beam_solution(coords, p: float, e: float, nu: float):
    """Homogeneous tension state: sigma_xx = p everywhere.

    The axial plane x = 0 is held (u_x(0) = 0) and the lateral displacements
    vanish on the section axes, so u = (p/e) * (x, -nu*y, -nu*z).
    """
    coords = np.asarray(coords, dtype=np.float64)
    strain = p / e
    u = np.empty_like(coords)
    u[:, 0] = strain * coords[:, 0]
    for j in range(1, coords.shape[1]):
        u[:, j] = -nu * strain * coords[:, j]
    return u, p


# ---------------------------------------------------------------------------
# homogeneous uniaxial stretch of an incompressible Neo-Hookean sheet
# ---------------------------------------------------------------------------


def neo_hookean_uniaxial(stretch: float):
    """Closed-form homogeneous state: F, scaled pressure, scaled PK1 stress.

    The lateral contraction 1/stretch keeps det F = 1; requiring a
    traction-free lateral face fixes the pressure at stretch**-2, which gives
    PK1_xx = stretch - stretch**-3 and PK1_yy = 0.
    """
    if stretch <= 0:
        raise ValueError("stretch must be positive")
    f = np.diag([stretch, 1.0 / stretch])
    pbar = stretch**-2.0
    pk1 = -pbar * np.linalg.inv(f).T + f
    return f, pbar, pk1


def neo_hookean_uniaxial_field(coords, stretch: float):
    """Displacement field u = ((stretch-1) X, (1/stretch - 1) Y)."""
    coords = np.asarray(coords, dtype=np.float64)
    u = np.empty_like(coords)
    u[:, 0] = (stretch - 1.0) * coords[:, 0]
    u[:, 1] = (1.0 / stretch - 1.0) * coords[:, 1]
    return u


# ---------------------------------------------------------------------------
# finite-difference equilibrium checker
# ---------------------------------------------------------------------------


def _fd_jets(field: Callable, x: np.ndarray, h: float):
    """Field values and first derivatives by central differences."""
    n, d = x.shape
    val = field(x)
    grad = np.empty((d, n, val.shape[1]))
    for k in range(d):
        step = np.zeros(d)
        step[k] = h
        grad[k] = (field(x + step) - field(x - step)) / (2.0 * h)
    return val, grad


def elastic_stress_values(ratio: float, shear_scale: float = 1.0) -> Callable:
    """Stress evaluator for fd_residual_check (linear elasticity)."""

    def evaluate(value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        tape = Tape()
        jets = constant_jets(tape, value, grad)
        state = stress(jets, ratio, shear_scale, need_derivatives=False)
        d = state.dim
        out = np.empty((value.shape[0], d, d))
        for i in range(d):
            for j in range(d):
                out[:, i, j] = state.sigma[i][j].value
        return out

    return evaluate


def neo_hookean_stress_values(scales: ScaleSet) -> Callable:
    """PK1 evaluator for fd_residual_check; field outputs are (u_x, u_y, p)."""

    def evaluate(value: np.ndarray, grad: np.ndarray) -> np.ndarray:
        tape = Tape()
        jets = constant_jets(tape, value[:, :2], grad[:, :, :2])
        defm = deformation_gradient(jets, scales, need_derivatives=False)
        pbar = tape.leaf(value[:, 2], constant=True)
        state = pk1_stress(defm, pbar)
        out = np.empty((value.shape[0], 2, 2))
        for i in range(2):
            for j in range(2):
                out[:, i, j] = state.sigma[i][j].value
        return out

    return evaluate


def fd_residual_check(
    field: Callable,
    stress_values: Callable,
    probes: np.ndarray,
    h: float = 1e-3,
) -> float:
    """Max |div sigma| over probe points, everything by central differences.

    ``field`` maps scaled coordinates (N, d) to scaled outputs (N, m);
    ``stress_values`` maps finite-difference jets of the field to the stress
    tensor (N, d, d).  The divergence is taken by differencing the stress
    itself, so this check is independent of the tape-side derivative
    assembly.
    """
    probes = np.asarray(probes, dtype=np.float64)
    n, d = probes.shape
    resid = np.zeros((n, d))
    for k in range(d):
        step = np.zeros(d)
        step[k] = h
        sp = stress_values(*_fd_jets(field, probes + step, h))
        sm = stress_values(*_fd_jets(field, probes - step, h))
        resid += (sp[:, :, k] - sm[:, :, k]) / (2.0 * h)
    return float(np.abs(resid).max())
