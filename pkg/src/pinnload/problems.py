"""A fully specified experiment: geometry + material + scales + mode.

Bridges the point cloud (physical units) and the loss assembly (scaled
units).  A Problem owns everything a training run needs except the network
parameters and the optimizer state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .losses import LossInputs, SegmentArrays
from .network import MlpParams, forward
from .sampling import PointCloud
from .scaling import Material, ScaleSet, lame_ratio
from .transforms import DirichletTransform

__all__ = ["SegmentSpec", "Problem"]

DEFAULT_HIDDEN = (30,) * 5


@dataclass(frozen=True)
class SegmentSpec:
    """Orientation and ground-truth magnitude of one Neumann segment."""

    seg_id: int
    orientation: float  # -1: pressure (acts against the outward normal), +1: tension
    true_load: float  # physical units; the target in inverse runs, the
    #                   prescribed value in forward runs


@dataclass
class Problem:
    name: str
    kind: str  # 'elastic' | 'hyperelastic'
    mode: str  # 'forward' | 'inverse'
    material: Material
    scales: ScaleSet
    transform: DirichletTransform
    cloud: PointCloud
    segments: tuple[SegmentSpec, ...]
    hidden: tuple[int, ...] = DEFAULT_HIDDEN
    scaled: bool = True
    reference: Callable | None = None  # physical coords -> clean physical displacements

    def __post_init__(self):
        if self.kind not in ("elastic", "hyperelastic"):
            raise ValueError(f"unknown physics kind {self.kind!r}")
        if self.mode not in ("forward", "inverse"):
            raise ValueError(f"unknown mode {self.mode!r}")
        seg_tags = set(self.cloud.neumann_segments())
        spec_tags = {s.seg_id for s in self.segments}
        if seg_tags != spec_tags:
            raise ValueError(
                f"cloud has Neumann segments {sorted(seg_tags)}, "
                f"problem specifies {sorted(spec_tags)}"
            )

    @property
    def dim(self) -> int:
        return self.cloud.dim

    @property
    def n_out(self) -> int:
        return self.dim + (1 if self.kind == "hyperelastic" else 0)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.dim, *self.hidden, self.n_out)

    @property
    def segment_ids(self) -> tuple[int, ...]:
        return tuple(s.seg_id for s in self.segments)

    @property
    def true_loads(self) -> np.ndarray:
        return np.array([s.true_load for s in self.segments])

    def shear_scale(self) -> float:
        return 1.0 if self.scaled else self.material.mu

    def ratio(self) -> float:
        return lame_ratio(self.material) if self.kind == "elastic" else 0.0

    def loss_inputs(self) -> LossInputs:
        if getattr(self, "_loss_inputs", None) is not None:
            return self._loss_inputs
        sc = self.scales
        cloud = self.cloud

        free_idx = cloud.indices("free-bc")
        free = None
        if len(free_idx):
            free = (sc.scale_coords(cloud.coords[free_idx]), cloud.normals[free_idx])

        segments = []
        for spec in self.segments:
            idx = cloud.indices(f"neumann-segment-{spec.seg_id}")
            fixed = None
            if self.mode == "forward":
                fixed = float(sc.scale_load(spec.true_load))
            segments.append(
                SegmentArrays(
                    spec.seg_id,
                    sc.scale_coords(cloud.coords[idx]),
                    cloud.normals[idx],
                    spec.orientation,
                    fixed,
                )
            )

        dirichlet = None
        dbc_idx = cloud.indices("dirichlet")
        if len(dbc_idx):
            targets = cloud.observed[dbc_idx]
            mask = (~np.isnan(targets)).astype(np.float64)
            dirichlet = (
                sc.scale_coords(cloud.coords[dbc_idx]),
                sc.scale_displacement(np.where(np.isnan(targets), 0.0, targets)),
                mask,
            )

        data = None
        data_idx = cloud.indices("data")
        if len(data_idx):
            obs = cloud.observed[data_idx]
            if np.any(np.isnan(obs)):
                raise ValueError("data points with missing observation components")
            data = (sc.scale_coords(cloud.coords[data_idx]), sc.scale_displacement(obs))

        self._loss_inputs = LossInputs(
            kind=self.kind,
            mode=self.mode,
            dim=self.dim,
            n_out=self.n_out,
            ratio=self.ratio(),
            shear_scale=self.shear_scale(),
            scales=sc,
            transform=self.transform,
            collocation=sc.scale_coords(cloud.coords_of("collocation")),
            free=free,
            segments=segments,
            dirichlet=dirichlet,
            data=data,
        )
        return self._loss_inputs

    # -- prediction helpers (plain numpy, no tape) ----------------------

    def predict_scaled(self, params: MlpParams, xbar: np.ndarray) -> np.ndarray:
        """Transformed scaled network outputs at scaled coordinates."""
        return self.transform.apply_value(xbar, forward(params, xbar))

    def predict_displacement(self, params: MlpParams, coords: np.ndarray) -> np.ndarray:
        """Physical displacements at physical coordinates."""
        xbar = self.scales.scale_coords(coords)
        ubar = self.predict_scaled(params, xbar)[:, : self.dim]
        return self.scales.unscale_displacement(ubar)

    def reference_scaled_at_collocation(self) -> np.ndarray | None:
        """Clean scaled reference displacements at the collocation points."""
        if self.reference is None:
            return None
        if getattr(self, "_ref_col", None) is None:
            coords = self.cloud.coords_of("collocation")
            self._ref_col = self.scales.scale_displacement(self.reference(coords))
        return self._ref_col
