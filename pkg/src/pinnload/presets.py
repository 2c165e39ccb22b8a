"""Experiment presets: geometry, material, scales, loads, and data recipes.

Each preset fixes a physical setup and its non-dimensionalization:

    cylinder        quarter of a thick annulus under inner pressure (plane
                    stress, analytic reference)
    plate2x2        square incompressible Neo-Hookean block, clamped left,
                    line load on the right (offline transfer source)
    plate4x2/2x4    geometrically scaled rectangular blocks, two loads on the
                    loaded edge, sparse monitoring points
    beam3d          prismatic bar under uniform tension (analytic reference),
                    noisy data
    tunnel2p        annular lining ring, vertical/lateral pressure pairs on
                    opposite outer arcs (doubly symmetric)
    tunnel4p_a/b    four pressures on opposite 45-degree arc pairs; rigid
                    modes pinned softly in forward reference solves

Loads on opposite arc pairs are self-equilibrated for any magnitudes, which
keeps the pure-traction ring solvable; symmetric cases additionally get hard
symmetry transforms.  References are the analytic solutions where they
exist and dense forward solves otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .oracles import (
    cylinder_displacement,
    neo_hookean_uniaxial,
    neo_hookean_uniaxial_field,
    uniaxial_beam_solution,
)
from .problems import Problem, SegmentSpec
from .sampling import (
    PointCloud,
    add_noise,
    box_cloud,
    full_ring_cloud,
    pick_monitoring,
    quarter_annulus_cloud,
    rectangle_cloud,
)
from .scaling import Material, ScaleSet, make_scales, plain_scales
from .transforms import AffineMultiplier, DirichletTransform

__all__ = ["Preset", "get_preset", "list_presets", "make_dataset", "build_problem"]


def _deg(a: float) -> float:
    return a * math.pi / 180.0


def _axis_multiplier(dim: int, axis: int, anchor: float, l_c: float) -> AffineMultiplier:
    """Multiplier vanishing on the plane x_axis = anchor (physical units)."""
    linear = [0.0] * dim
    linear[axis] = 1.0
    return AffineMultiplier(const=-anchor / l_c, linear=tuple(linear))


@dataclass
class Preset:
    name: str
    kind: str  # elastic | hyperelastic
    formulation: str
    E: float
    nu: float
    l_c: float
    u_c: float
    segments: tuple[SegmentSpec, ...]
    domain: str
    resolution: dict
    # per displacement component: None or (axis, physical anchor) for the
    # hard multiplier; pressure output (hyperelastic) is never transformed
    transform_spec: tuple = ()
    oracle: Callable | None = None
    reference: str = "oracle"  # oracle | forward
    forward_epochs: int = 12000
    noise: tuple = ()  # default per-component noise levels for datasets
    monitoring: int | None = None  # None: observe every collocation point
    monitoring_band: float | None = None  # restrict candidates near the outer ring
    pins: list = field(default_factory=list)  # rigid-mode pins for forward solves

    @property
    def dim(self) -> int:
        return 3 if self.domain == "box" else 2

    def material(self) -> Material:
        return Material(self.E, self.nu, self.formulation)

    def scales(self, scaled: bool = True) -> ScaleSet:
        mode = "hyperelastic" if self.kind == "hyperelastic" else "linear-elastic"
        if not scaled:
            return plain_scales(mode)
        return make_scales(self.l_c, self.u_c, self.material(), mode)

    def transform(self, scaled: bool = True) -> DirichletTransform:
        l_c = self.l_c if scaled else 1.0
        mults = []
        for spec in self.transform_spec:
            if spec is None:
                mults.append(None)
            else:
                axis, anchor = spec
                mults.append(_axis_multiplier(self.dim, axis, anchor, l_c))
        if self.kind == "hyperelastic":
            mults.append(None)
        return DirichletTransform(tuple(mults))

    def build_cloud(self, resolution: dict | None = None, include_pins: bool = False) -> PointCloud:
        res = dict(self.resolution)
        if resolution:
            res.update(resolution)
        cloud = _DOMAIN_BUILDERS[self.name](self, res, include_pins)
        cloud.validate()
        return cloud

    def oracle_displacement(self, coords: np.ndarray) -> np.ndarray:
        if self.oracle is None:
            raise ValueError(f"preset {self.name} has no analytic reference")
        return self.oracle(coords)


# ---------------------------------------------------------------------------
# domain builders
# ---------------------------------------------------------------------------


def _cylinder_cloud(preset: Preset, res: dict, include_pins: bool) -> PointCloud:
    return quarter_annulus_cloud(
        r_inner=1.0, r_outer=5.0,
        n_r=res["n_r"], n_beta=res["n_beta"], n_edge=res["n_edge"],
    )


def _plate_cloud(bounds):
    def build(preset: Preset, res: dict, include_pins: bool) -> PointCloud:
        n_load = len(preset.segments)
        return rectangle_cloud(
            bounds,
            n_x=res["n_x"], n_y=res["n_y"], n_edge=res["n_edge"],
            roles={
                "right": ("neumann", tuple(s.seg_id for s in preset.segments)),
                "top": ("free",),
                "bottom": ("free",),
            },
        )

    return build


def _uniaxial_cloud(preset: Preset, res: dict, include_pins: bool) -> PointCloud:
    return rectangle_cloud(
        ((0.0, 1.0), (0.0, 1.0)),
        n_x=res["n_x"], n_y=res["n_y"], n_edge=res["n_edge"],
        roles={"right": ("neumann", (1,)), "top": ("free",)},
    )


def _beam_cloud(preset: Preset, res: dict, include_pins: bool) -> PointCloud:
    return box_cloud(
        ((0.0, 10.0), (-1.0, 1.0), (-1.0, 1.0)),
        n_axis=res["n_axis"], n_face=res["n_face"],
        roles={
            "x1": ("neumann", (1,)),
            "y0": ("free",), "y1": ("free",),
            "z0": ("free",), "z1": ("free",),
        },
    )


_TUNNEL_R_IN, _TUNNEL_R_OUT = 3.5, 4.0

_ARCS_2P = {
    1: [(_deg(45), _deg(135)), (_deg(225), _deg(315))],
    2: [(_deg(-45), _deg(45)), (_deg(135), _deg(225))],
}
_ARCS_4P = {
    1: [(_deg(67.5), _deg(112.5)), (_deg(247.5), _deg(292.5))],
    2: [(_deg(22.5), _deg(67.5)), (_deg(202.5), _deg(247.5))],
    3: [(_deg(-22.5), _deg(22.5)), (_deg(157.5), _deg(202.5))],
    4: [(_deg(112.5), _deg(157.5)), (_deg(292.5), _deg(337.5))],
}


def _tunnel_cloud(arcs):
    def build(preset: Preset, res: dict, include_pins: bool) -> PointCloud:
        pins = preset.pins if include_pins else None
        return full_ring_cloud(
            _TUNNEL_R_IN, _TUNNEL_R_OUT,
            n_r=res["n_r"], n_theta=res["n_theta"], n_inner=res["n_inner"],
            arcs=arcs, n_per_arc=res["n_per_arc"], pins=pins,
        )

    return build


# ---------------------------------------------------------------------------
# the catalog
# ---------------------------------------------------------------------------


def _cylinder_oracle(coords):
    return cylinder_displacement(coords, 1.0, 5.0, 20.0, 1.0e5, 0.3)


def _beam_oracle(coords):
    return uniaxial_beam_solution(coords, 2.0, 500.0, 0.3)[0]


_STRETCH = 1.1


def _uniaxial_oracle(coords):
    return neo_hookean_uniaxial_field(coords, _STRETCH)


def _uniaxial_true_load() -> float:
    # physical line load matching the scaled PK1 traction of the
    # homogeneous stretch state
    mu = Material(1000.0, 0.5, "incompressible-2d").mu
    return float(neo_hookean_uniaxial(_STRETCH)[2][0, 0] * mu)


PRESETS: dict[str, Preset] = {}


def _register(p: Preset) -> None:
    PRESETS[p.name] = p


_register(Preset(
    name="cylinder",
    kind="elastic", formulation="plane-stress", E=1.0e5, nu=0.3,
    l_c=5.0, u_c=0.0003,
    segments=(SegmentSpec(1, -1.0, 20.0),),
    domain="quarter-annulus",
    resolution={"n_r": 40, "n_beta": 40, "n_edge": 100},
    transform_spec=((0, 0.0), (1, 0.0)),  # u_x ~ x, u_y ~ y (symmetry axes)
    oracle=_cylinder_oracle,
))

_register(Preset(
    name="plate2x2",
    kind="hyperelastic", formulation="incompressible-2d", E=1000.0, nu=0.5,
    l_c=1.0, u_c=0.03,
    segments=(SegmentSpec(1, +1.0, 20.0),),
    domain="rectangle",
    resolution={"n_x": 20, "n_y": 20, "n_edge": 40},
    transform_spec=((0, -1.0), (0, -1.0)),  # both components vanish on x = -1
    reference="forward", forward_epochs=12000,
))

_register(Preset(
    name="plate4x2",
    kind="hyperelastic", formulation="incompressible-2d", E=1000.0, nu=0.5,
    l_c=2.0, u_c=0.08,
    segments=(SegmentSpec(1, +1.0, 15.0), SegmentSpec(2, +1.0, 15.0)),
    domain="rectangle",
    resolution={"n_x": 28, "n_y": 14, "n_edge": 30},
    transform_spec=((0, -2.0), (0, -2.0)),
    reference="forward", forward_epochs=12000,
    monitoring=20,
))

_register(Preset(
    name="plate2x4",
    kind="hyperelastic", formulation="incompressible-2d", E=1000.0, nu=0.5,
    l_c=2.0, u_c=0.047,
    segments=(SegmentSpec(1, +1.0, 15.0), SegmentSpec(2, +1.0, 15.0)),
    domain="rectangle",
    resolution={"n_x": 14, "n_y": 28, "n_edge": 30},
    transform_spec=((0, -1.0), (0, -1.0)),
    reference="forward", forward_epochs=12000,
    monitoring=20,
))

_register(Preset(
    name="beam3d",
    kind="elastic", formulation="3d", E=500.0, nu=0.3,
    l_c=5.0, u_c=0.04,
    segments=(SegmentSpec(1, +1.0, 2.0),),
    domain="box",
    resolution={"n_axis": (10, 4, 4), "n_face": 5},
    transform_spec=((0, 0.0), (1, 0.0), (2, 0.0)),
    oracle=_beam_oracle,
    noise=(0.10, 0.10, 0.10),
))

_register(Preset(
    name="hyper_uniaxial",
    kind="hyperelastic", formulation="incompressible-2d", E=1000.0, nu=0.5,
    l_c=1.0, u_c=_STRETCH - 1.0,
    segments=(SegmentSpec(1, +1.0, _uniaxial_true_load()),),
    domain="rectangle",
    resolution={"n_x": 14, "n_y": 14, "n_edge": 30},
    transform_spec=((0, 0.0), (1, 0.0)),
    oracle=_uniaxial_oracle,
))

_register(Preset(
    name="tunnel2p",
    kind="elastic", formulation="plane-strain", E=3.0e7, nu=0.2,
    l_c=4.0, u_c=0.0018,
    segments=(SegmentSpec(1, -1.0, 100.0), SegmentSpec(2, -1.0, 80.0)),
    domain="full-ring",
    resolution={"n_r": 5, "n_theta": 120, "n_inner": 120, "n_per_arc": 40},
    transform_spec=((0, 0.0), (1, 0.0)),  # doubly symmetric loading
    reference="forward", forward_epochs=15000,
    noise=(0.1125, 0.1006),
    monitoring=40, monitoring_band=0.3,
))

_TUNNEL_PINS = [((0.0, -1.0), (0.0, 0.0)), ((0.0, 1.0), (0.0, None))]

_register(Preset(
    name="tunnel4p_a",
    kind="elastic", formulation="plane-strain", E=3.0e7, nu=0.2,
    l_c=4.0, u_c=0.0024,
    segments=(
        SegmentSpec(1, -1.0, 130.0), SegmentSpec(2, -1.0, 120.0),
        SegmentSpec(3, -1.0, 110.0), SegmentSpec(4, -1.0, 100.0),
    ),
    domain="full-ring",
    resolution={"n_r": 5, "n_theta": 120, "n_inner": 120, "n_per_arc": 24},
    transform_spec=(None, None),
    reference="forward", forward_epochs=15000,
    noise=(0.08015, 0.06129),
    monitoring=40, monitoring_band=0.3,
    pins=_TUNNEL_PINS,
))

_register(Preset(
    name="tunnel4p_b",
    kind="elastic", formulation="plane-strain", E=3.0e7, nu=0.2,
    l_c=4.0, u_c=0.002,
    segments=(
        SegmentSpec(1, -1.0, 100.0), SegmentSpec(2, -1.0, 110.0),
        SegmentSpec(3, -1.0, 130.0), SegmentSpec(4, -1.0, 120.0),
    ),
    domain="full-ring",
    resolution={"n_r": 5, "n_theta": 120, "n_inner": 120, "n_per_arc": 24},
    transform_spec=(None, None),
    reference="forward", forward_epochs=15000,
    noise=(0.06563, 0.07007),
    monitoring=40, monitoring_band=0.3,
    pins=_TUNNEL_PINS,
))

_DOMAIN_BUILDERS = {
    "cylinder": _cylinder_cloud,
    "plate2x2": _plate_cloud(((-1.0, 1.0), (-1.0, 1.0))),
    "plate4x2": _plate_cloud(((-2.0, 2.0), (-1.0, 1.0))),
    "plate2x4": _plate_cloud(((-1.0, 1.0), (-2.0, 2.0))),
    "beam3d": _beam_cloud,
    "hyper_uniaxial": _uniaxial_cloud,
    "tunnel2p": _tunnel_cloud(_ARCS_2P),
    "tunnel4p_a": _tunnel_cloud(_ARCS_4P),
    "tunnel4p_b": _tunnel_cloud(_ARCS_4P),
}


def get_preset(name: str) -> Preset:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]


def list_presets() -> list[str]:
    return sorted(PRESETS)


# ---------------------------------------------------------------------------
# datasets and problems
# ---------------------------------------------------------------------------


def _monitoring_candidates(preset: Preset, cloud: PointCloud) -> np.ndarray | None:
    if preset.monitoring_band is None:
        return None
    # sensors sit near the outer lining surface
    idx = cloud.indices("collocation")
    r = np.linalg.norm(cloud.coords[idx], axis=1)
    band = _TUNNEL_R_OUT - preset.monitoring_band * (_TUNNEL_R_OUT - _TUNNEL_R_IN)
    return idx[r >= band]


def make_dataset(
    preset_name: str,
    *,
    noise=None,
    monitoring: int | str | None = None,
    seed: int = 0,
    resolution: dict | None = None,
    reference_fn: Callable | None = None,
) -> tuple[PointCloud, str]:
    """Physics cloud plus observed displacements at monitoring points.

    ``reference_fn`` (physical coords -> physical displacements) must be
    supplied for presets whose reference is a forward solve; analytic presets
    default to their oracle.  ``monitoring=None`` uses the preset default;
    ``monitoring="all"`` (or a preset default of None) observes every
    collocation point.
    """
    preset = get_preset(preset_name)
    cloud = preset.build_cloud(resolution)
    if reference_fn is None:
        if preset.reference != "oracle":
            raise ValueError(
                f"preset {preset_name} needs a forward-solve reference; "
                "pass reference_fn (see forward_reference)"
            )
        reference_fn = preset.oracle_displacement
        source = f"oracle:{preset_name}"
    else:
        source = f"forward-solve:{preset_name}"

    n_mon = preset.monitoring if monitoring is None else monitoring
    if n_mon == "all":
        n_mon = None
    if n_mon is None:
        coords = cloud.coords_of("collocation").copy()
        data = PointCloud(
            cloud.dim, coords, ["data"] * len(coords),
            np.full_like(coords, np.nan), np.full_like(coords, np.nan),
        )
    else:
        data = pick_monitoring(cloud, n_mon, seed, _monitoring_candidates(preset, cloud))

    clean = reference_fn(data.coords)
    levels = preset.noise if noise is None else noise
    if np.any(np.asarray(levels) > 0):
        data.observed[:] = add_noise(clean, levels, seed + 1)
        noise_note = f" noise={tuple(np.round(np.atleast_1d(levels), 6))}"
    else:
        data.observed[:] = clean
        noise_note = " noise=0"
    full = PointCloud.concat([cloud, data])
    full.validate()
    provenance = f"{source}{noise_note} monitoring={n_mon or 'all'} seed={seed}"
    return full, provenance


def build_problem(
    preset_name: str,
    mode: str,
    *,
    cloud: PointCloud | None = None,
    resolution: dict | None = None,
    scaled: bool = True,
    reference_fn: Callable | None = None,
) -> Problem:
    """Assemble a Problem for a preset.

    Forward problems sample their own cloud (with rigid-mode pins when the
    preset defines them); inverse problems take a dataset cloud from
    :func:`make_dataset` or a CSV file.  ``reference_fn`` overrides the clean
    reference used for the true-field error metric.
    """
    preset = get_preset(preset_name)
    if cloud is None:
        cloud = preset.build_cloud(resolution, include_pins=(mode == "forward"))
    reference = reference_fn
    if reference is None and preset.oracle is not None:
        reference = preset.oracle_displacement
    return Problem(
        name=preset_name,
        kind=preset.kind,
        mode=mode,
        material=preset.material(),
        scales=preset.scales(scaled),
        transform=preset.transform(scaled),
        cloud=cloud,
        segments=preset.segments,
        scaled=scaled,
        reference=reference,
    )
