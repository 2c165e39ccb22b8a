"""Non-dimensionalization bookkeeping.

Coordinates are scaled by the largest geometric extent ``l_c``, displacements
by the largest expected displacement magnitude ``u_c``.  The stress scale is
derived: ``sigma_c = mu * u_c / l_c`` for linear elasticity and
``sigma_c = mu`` for the incompressible hyperelastic model.  An "unscaled"
ScaleSet (all factors 1) reproduces the raw-unit formulation for ablations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Material", "ScaleSet", "make_scales", "lame_ratio", "plain_scales"]

FORMULATIONS = ("plane-stress", "plane-strain", "3d", "incompressible-2d")
MODES = ("linear-elastic", "hyperelastic")


@dataclass(frozen=True)
class Material:
    """Elastic constants; Lame parameters are derived from E and nu."""

    E: float
    nu: float
    formulation: str = "plane-stress"

    def __post_init__(self):
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.E <= 0:
            raise ValueError("elastic modulus must be positive")
        incompressible = self.formulation == "incompressible-2d"
        if incompressible and self.nu != 0.5:
            raise ValueError("incompressible formulation requires nu = 0.5")
        if not incompressible and not 0 <= self.nu < 0.5:
            raise ValueError(f"nu = {self.nu} invalid for compressible formulation")

    @property
    def mu(self) -> float:
        return self.E / (2.0 * (1.0 + self.nu))

    @property
    def lam(self) -> float:
        """First Lame parameter (3D / plane-strain definition)."""
        if self.formulation == "incompressible-2d":
            raise ValueError("lambda is undefined at nu = 0.5")
        return self.E * self.nu / ((1.0 + self.nu) * (1.0 - 2.0 * self.nu))


def lame_ratio(material: Material) -> float:
    """Ratio lambda/mu entering the dimensionless stress.

    Plane stress uses the effective lambda* = 2*lambda*mu/(lambda + 2*mu),
    which reduces the ratio to 2*nu/(1 - nu); plane strain and 3D use
    2*nu/(1 - 2*nu).
    """
    nu = material.nu
    if material.formulation == "plane-stress":
        return 2.0 * nu / (1.0 - nu)
    if material.formulation in ("plane-strain", "3d"):
        if nu >= 0.5:
            raise ValueError("nu = 0.5 has no compressible Lame ratio")
        return 2.0 * nu / (1.0 - 2.0 * nu)
    raise ValueError(f"no Lame ratio for formulation {material.formulation!r}")


@dataclass(frozen=True)
class ScaleSet:
    """Length/displacement/stress scales for one problem."""

    l_c: float
    u_c: float
    sigma_c: float
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.l_c <= 0 or self.u_c <= 0 or self.sigma_c <= 0:
            raise ValueError("scaling factors must be positive")

    # Scaling is implemented as division by the factor (not multiplication by
    # its reciprocal) so that rescaling all physical quantities by a common
    # power of two leaves every scaled value bit-identical.

    def scale_coords(self, x):
        return np.asarray(x, dtype=np.float64) / self.l_c

    def scale_displacement(self, u):
        return np.asarray(u, dtype=np.float64) / self.u_c

    def unscale_displacement(self, ubar):
        return np.asarray(ubar, dtype=np.float64) * self.u_c

    def scale_load(self, p):
        return np.asarray(p, dtype=np.float64) / self.sigma_c

    def unscale_load(self, pbar):
        return np.asarray(pbar, dtype=np.float64) * self.sigma_c

    def as_dict(self) -> dict:
        return {"l_c": self.l_c, "u_c": self.u_c, "sigma_c": self.sigma_c, "mode": self.mode}


def make_scales(
    geometry_extent: float,
    displacement_extent: float,
    material: Material,
    mode: str = "linear-elastic",
) -> ScaleSet:
    """Build scales from the largest geometric / displacement magnitudes."""
    if geometry_extent <= 0 or displacement_extent <= 0:
        raise ValueError("extents must be positive")
    l_c = float(geometry_extent)
    u_c = float(displacement_extent)
    if mode == "hyperelastic":
        sigma_c = material.mu
    elif mode == "linear-elastic":
        sigma_c = material.mu * u_c / l_c
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return ScaleSet(l_c, u_c, sigma_c, mode)


def plain_scales(mode: str = "linear-elastic") -> ScaleSet:
    """Identity scales for raw-unit ("unscaled") ablation runs."""
    return ScaleSet(1.0, 1.0, 1.0, mode)
