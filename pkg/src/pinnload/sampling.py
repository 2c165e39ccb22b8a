"""Tagged point clouds: domain samplers, monitoring picks, calibrated noise.

Every sample point carries one tag (collocation / free-bc /
neumann-segment-j / dirichlet / data), an outward unit normal when it sits on
a boundary, and observed displacements where applicable.  Unknown entries
are NaN, which maps to blank fields in the CSV format:

    # provenance: <free text>
    x,y[,z],tag,nx,ny[,nz],ux_obs,uy_obs[,uz_obs]

Dirichlet rows may constrain a subset of components (blank = unconstrained).
Collocation grids are deterministic; the seed arguments feed the randomized
operations (monitoring-point selection and noise).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PointCloud",
    "quarter_annulus_cloud",
    "rectangle_cloud",
    "box_cloud",
    "full_ring_cloud",
    "sample_domain",
    "pick_monitoring",
    "add_noise",
    "write_cloud_csv",
    "read_cloud_csv",
]

BOUNDARY_TAGS = ("free-bc", "dirichlet")  # plus neumann-segment-<j>


def _is_boundary(tag: str) -> bool:
    return tag in BOUNDARY_TAGS or tag.startswith("neumann-segment-")


@dataclass
class PointCloud:
    dim: int
    coords: np.ndarray
    tags: list[str]
    normals: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        self.coords = np.asarray(self.coords, dtype=np.float64)
        self.normals = np.asarray(self.normals, dtype=np.float64)
        self.observed = np.asarray(self.observed, dtype=np.float64)

    @property
    def n(self) -> int:
        return len(self.tags)

    def indices(self, tag: str) -> np.ndarray:
        return np.array([i for i, t in enumerate(self.tags) if t == tag], dtype=int)

    def coords_of(self, tag: str) -> np.ndarray:
        return self.coords[self.indices(tag)]

    def neumann_segments(self) -> list[int]:
        segs = {
            int(t.rsplit("-", 1)[1])
            for t in self.tags
            if t.startswith("neumann-segment-")
        }
        return sorted(segs)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for t in self.tags:
            out[t] = out.get(t, 0) + 1
        return out

    def validate(self) -> None:
        n = self.n
        if self.coords.shape != (n, self.dim):
            raise ValueError("coords shape mismatch")
        if self.normals.shape != (n, self.dim) or self.observed.shape != (n, self.dim):
            raise ValueError("normals/observed shape mismatch")
        for i, t in enumerate(self.tags):
            has_normal = not np.all(np.isnan(self.normals[i]))
            if _is_boundary(t) != has_normal:
                raise ValueError(f"point {i} ({t}): normal presence inconsistent")
            if has_normal:
                length = np.linalg.norm(self.normals[i])
                if abs(length - 1.0) > 1e-12:
                    raise ValueError(f"point {i}: normal not unit (|N|={length!r})")
            if t == "data" and np.all(np.isnan(self.observed[i])):
                raise ValueError(f"data point {i} carries no observation")

    @staticmethod
    def concat(clouds: list["PointCloud"]) -> "PointCloud":
        dim = clouds[0].dim
        if any(c.dim != dim for c in clouds):
            raise ValueError("cannot concatenate clouds of different dimension")
        return PointCloud(
            dim,
            np.concatenate([c.coords for c in clouds]),
            [t for c in clouds for t in c.tags],
            np.concatenate([c.normals for c in clouds]),
            np.concatenate([c.observed for c in clouds]),
        )


def _empty(n: int, dim: int) -> tuple[np.ndarray, np.ndarray]:
    return np.full((n, dim), np.nan), np.full((n, dim), np.nan)


def _make(dim, coords, tags, normals=None, observed=None) -> PointCloud:
    coords = np.asarray(coords, dtype=np.float64)
    nrm, obs = _empty(len(coords), dim)
    if normals is not None:
        nrm = np.asarray(normals, dtype=np.float64)
    if observed is not None:
        obs = np.asarray(observed, dtype=np.float64)
    return PointCloud(dim, coords, list(tags), nrm, obs)


def _interior(a: float, b: float, n: int) -> np.ndarray:
    return np.linspace(a, b, n + 2)[1:-1]


def _span(a: float, b: float, n: int) -> np.ndarray:
    """n points strictly inside (a, b) but reaching to its edges.

    Collocation grids use this: leaving a full grid-cell gap next to a
    boundary lets the network form an unsupervised layer there that decouples
    the boundary traction from the interior field (and with it, any
    learnable load).  The margin keeps the points strictly interior while
    denying that layer any room.
    """
    margin = (b - a) * 1e-3
    return np.linspace(a + margin, b - margin, n)


def _dirichlet_obs(values, n: int, dim: int) -> np.ndarray:
    obs = np.full((n, dim), np.nan)
    for c, v in enumerate(values):
        if v is not None:
            obs[:, c] = v
    return obs


# ---------------------------------------------------------------------------
# domain samplers
# ---------------------------------------------------------------------------


def quarter_annulus_cloud(
    r_inner: float,
    r_outer: float,
    n_r: int,
    n_beta: int,
    n_edge: int,
) -> PointCloud:
    """First-quadrant annulus: pressurized inner arc, free outer arc,
    symmetry edges on the axes (u_x = 0 on x = 0, u_y = 0 on y = 0)."""
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    parts = []

    r = _span(r_inner, r_outer, n_r)
    beta = _span(0.0, np.pi / 2, n_beta)
    rr, bb = np.meshgrid(r, beta, indexing="ij")
    col = np.stack([rr.ravel() * np.cos(bb.ravel()), rr.ravel() * np.sin(bb.ravel())], 1)
    parts.append(_make(2, col, ["collocation"] * len(col)))

    beta_e = _interior(0.0, np.pi / 2, n_edge)
    inner = np.stack([r_inner * np.cos(beta_e), r_inner * np.sin(beta_e)], 1)
    nin = -np.stack([np.cos(beta_e), np.sin(beta_e)], 1)
    parts.append(_make(2, inner, ["neumann-segment-1"] * n_edge, nin))

    outer = np.stack([r_outer * np.cos(beta_e), r_outer * np.sin(beta_e)], 1)
    parts.append(_make(2, outer, ["free-bc"] * n_edge, -nin))

    r_e = _interior(r_inner, r_outer, n_edge)
    xaxis = np.stack([r_e, np.zeros(n_edge)], 1)
    n_x = np.tile([0.0, -1.0], (n_edge, 1))
    parts.append(
        _make(2, xaxis, ["dirichlet"] * n_edge, n_x, _dirichlet_obs((None, 0.0), n_edge, 2))
    )
    yaxis = np.stack([np.zeros(n_edge), r_e], 1)
    n_y = np.tile([-1.0, 0.0], (n_edge, 1))
    parts.append(
        _make(2, yaxis, ["dirichlet"] * n_edge, n_y, _dirichlet_obs((0.0, None), n_edge, 2))
    )
    return PointCloud.concat(parts)


_EDGES_2D = {
    "left": (0, -1.0),
    "right": (0, +1.0),
    "bottom": (1, -1.0),
    "top": (1, +1.0),
}


def rectangle_cloud(
    bounds: tuple[tuple[float, float], tuple[float, float]],
    n_x: int,
    n_y: int,
    n_edge: int,
    roles: dict,
) -> PointCloud:
    """Axis-aligned rectangle with per-edge roles.

    ``roles`` maps left/right/top/bottom to ('free',) or
    ('dirichlet', (vx, vy)) with None for unconstrained components, or
    ('neumann', (seg_id, ...)) splitting the edge into equal consecutive
    segments.
    """
    (x0, x1), (y0, y1) = bounds
    if x1 <= x0 or y1 <= y0:
        raise ValueError("degenerate rectangle bounds")
    parts = []
    xs, ys = _span(x0, x1, n_x), _span(y0, y1, n_y)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    col = np.stack([xx.ravel(), yy.ravel()], 1)
    parts.append(_make(2, col, ["collocation"] * len(col)))

    for edge, role in roles.items():
        axis, sign = _EDGES_2D[edge]
        lo, hi = (y0, y1) if axis == 0 else (x0, x1)
        fixed = {( -1.0): (x0 if axis == 0 else y0), (+1.0): (x1 if axis == 0 else y1)}[sign]
        normal = np.zeros(2)
        normal[axis] = sign
        kind = role[0]
        if kind == "neumann":
            seg_ids = role[1]
            edges = np.linspace(lo, hi, len(seg_ids) + 1)
            for seg, (a, b) in zip(seg_ids, zip(edges[:-1], edges[1:])):
                t = _interior(a, b, n_edge)
                coords = np.empty((n_edge, 2))
                coords[:, axis] = fixed
                coords[:, 1 - axis] = t
                parts.append(
                    _make(2, coords, [f"neumann-segment-{seg}"] * n_edge,
                          np.tile(normal, (n_edge, 1)))
                )
            continue
        t = _interior(lo, hi, n_edge)
        coords = np.empty((n_edge, 2))
        coords[:, axis] = fixed
        coords[:, 1 - axis] = t
        if kind == "free":
            parts.append(_make(2, coords, ["free-bc"] * n_edge, np.tile(normal, (n_edge, 1))))
        elif kind == "dirichlet":
            parts.append(
                _make(2, coords, ["dirichlet"] * n_edge, np.tile(normal, (n_edge, 1)),
                      _dirichlet_obs(role[1], n_edge, 2))
            )
        else:
            raise ValueError(f"unknown edge role {kind!r}")
    return PointCloud.concat(parts)


_FACES_3D = {
    "x0": (0, -1.0), "x1": (0, +1.0),
    "y0": (1, -1.0), "y1": (1, +1.0),
    "z0": (2, -1.0), "z1": (2, +1.0),
}


def box_cloud(
    bounds: tuple[tuple[float, float], ...],
    n_axis: tuple[int, int, int],
    n_face: int,
    roles: dict,
) -> PointCloud:
    """Axis-aligned box; faces x0/x1/y0/y1/z0/z1 take the same roles as
    rectangle edges.  Face samples are (n_face x n_face) interior grids."""
    if len(bounds) != 3:
        raise ValueError("box needs 3 coordinate ranges")
    parts = []
    axes = [_span(lo, hi, n) for (lo, hi), n in zip(bounds, n_axis)]
    g = np.meshgrid(*axes, indexing="ij")
    col = np.stack([a.ravel() for a in g], 1)
    parts.append(_make(3, col, ["collocation"] * len(col)))

    for face, role in roles.items():
        axis, sign = _FACES_3D[face]
        others = [i for i in range(3) if i != axis]
        fixed = bounds[axis][0] if sign < 0 else bounds[axis][1]
        u = _interior(*bounds[others[0]], n_face)
        v = _interior(*bounds[others[1]], n_face)
        uu, vv = np.meshgrid(u, v, indexing="ij")
        coords = np.empty((n_face * n_face, 3))
        coords[:, axis] = fixed
        coords[:, others[0]] = uu.ravel()
        coords[:, others[1]] = vv.ravel()
        normal = np.zeros(3)
        normal[axis] = sign
        normals = np.tile(normal, (len(coords), 1))
        kind = role[0]
        if kind == "free":
            parts.append(_make(3, coords, ["free-bc"] * len(coords), normals))
        elif kind == "dirichlet":
            parts.append(_make(3, coords, ["dirichlet"] * len(coords), normals,
                                _dirichlet_obs(role[1], len(coords), 3)))
        elif kind == "neumann":
            seg = role[1][0]
            parts.append(_make(3, coords, [f"neumann-segment-{seg}"] * len(coords), normals))
        else:
            raise ValueError(f"unknown face role {kind!r}")
    return PointCloud.concat(parts)


def full_ring_cloud(
    r_inner: float,
    r_outer: float,
    n_r: int,
    n_theta: int,
    n_inner: int,
    arcs: dict[int, list[tuple[float, float]]],
    n_per_arc: int,
    pins: list[tuple[tuple[float, float], tuple]] | None = None,
) -> PointCloud:
    """Closed annular ring (tunnel lining).

    The inner circle is traction-free; the outer circle is divided into
    ``arcs``: segment id -> list of (theta0, theta1) in radians, each arc
    sampled with ``n_per_arc`` points and outward radial normals.  ``pins``
    adds isolated dirichlet points (coordinates snapped onto the outer
    circle) with per-component constraint tuples, used to pin rigid modes in
    forward solves.
    """
    if not 0 < r_inner < r_outer:
        raise ValueError("need 0 < r_inner < r_outer")
    parts = []
    r = _span(r_inner, r_outer, n_r)
    theta = np.linspace(0.0, 2.0 * np.pi, n_theta, endpoint=False)
    rr, tt = np.meshgrid(r, theta, indexing="ij")
    col = np.stack([rr.ravel() * np.cos(tt.ravel()), rr.ravel() * np.sin(tt.ravel())], 1)
    parts.append(_make(2, col, ["collocation"] * len(col)))

    ti = np.linspace(0.0, 2.0 * np.pi, n_inner, endpoint=False)
    inner = np.stack([r_inner * np.cos(ti), r_inner * np.sin(ti)], 1)
    parts.append(_make(2, inner, ["free-bc"] * n_inner,
                       -np.stack([np.cos(ti), np.sin(ti)], 1)))

    for seg, arc_list in sorted(arcs.items()):
        for t0, t1 in arc_list:
            ta = _interior(t0, t1, n_per_arc)
            coords = np.stack([r_outer * np.cos(ta), r_outer * np.sin(ta)], 1)
            normals = np.stack([np.cos(ta), np.sin(ta)], 1)
            parts.append(_make(2, coords, [f"neumann-segment-{seg}"] * n_per_arc, normals))

    if pins:
        for (px, py), mask in pins:
            v = np.array([px, py])
            v = r_outer * v / np.linalg.norm(v)
            parts.append(_make(2, v[None, :], ["dirichlet"],
                                (v / r_outer)[None, :],
                                _dirichlet_obs(mask, 1, 2)))
    return PointCloud.concat(parts)


def sample_domain(kind: str, params: dict, seed: int = 0) -> PointCloud:
    """Dispatch to a preset domain sampler; grids are deterministic."""
    builders = {
        "quarter-annulus": quarter_annulus_cloud,
        "rectangle": rectangle_cloud,
        "box": box_cloud,
        "full-ring": full_ring_cloud,
    }
    if kind not in builders:
        raise ValueError(f"unknown domain kind {kind!r}; choose from {sorted(builders)}")
    cloud = builders[kind](**params)
    cloud.validate()
    return cloud


# ---------------------------------------------------------------------------
# monitoring points and noise
# ---------------------------------------------------------------------------


def pick_monitoring(
    cloud: PointCloud,
    n: int,
    seed: int,
    candidates: np.ndarray | None = None,
) -> PointCloud:
    """Uniform without-replacement pick of data-point locations.

    ``candidates`` restricts the pool to given point indices (defaults to all
    collocation points).  The result is a cloud of n points tagged 'data'
    with observations left to be attached.
    """
    idx = cloud.indices("collocation") if candidates is None else np.asarray(candidates)
    if n > len(idx):
        raise ValueError(f"requested {n} monitoring points from {len(idx)} candidates")
    rng = np.random.default_rng(seed)
    chosen = np.sort(rng.choice(idx, size=n, replace=False))
    return _make(cloud.dim, cloud.coords[chosen].copy(), ["data"] * n)


def add_noise(clean: np.ndarray, rel_l2, seed: int) -> np.ndarray:
    """Gaussian noise with an exact per-component relative L2 error.

    The noise is standard normal, then rescaled per displacement component so
    that ||noisy - clean||_2 / ||clean||_2 equals the requested level
    exactly.  ``rel_l2`` is a scalar or one level per component.
    """
    clean = np.asarray(clean, dtype=np.float64)
    levels = np.broadcast_to(np.asarray(rel_l2, dtype=np.float64), (clean.shape[1],))
    if np.any(levels < 0):
        raise ValueError("noise level must be nonnegative")
    if not np.any(levels > 0):
        return clean.copy()
    rng = np.random.default_rng(seed)
    noisy = clean.copy()
    for c, rho in enumerate(levels):
        if rho == 0.0:
            continue
        norm = np.linalg.norm(clean[:, c])
        if norm == 0.0:
            raise ValueError(f"component {c} is identically zero; relative noise undefined")
        g = rng.standard_normal(clean.shape[0])
        noisy[:, c] += rho * norm / np.linalg.norm(g) * g
    return noisy


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return "" if np.isnan(x) else repr(float(x))


def write_cloud_csv(cloud: PointCloud, path, provenance: str = "") -> None:
    axes = "xyz"[: cloud.dim]
    header = (
        list(axes)
        + ["tag"]
        + [f"n{a}" for a in axes]
        + [f"u{a}_obs" for a in axes]
    )
    with open(path, "w", newline="") as fh:
        fh.write(f"# provenance: {provenance}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(cloud.n):
            row = [_fmt(v) for v in cloud.coords[i]]
            row.append(cloud.tags[i])
            row += [_fmt(v) for v in cloud.normals[i]]
            row += [_fmt(v) for v in cloud.observed[i]]
            writer.writerow(row)


def read_cloud_csv(path) -> tuple[PointCloud, str]:
    with open(path, newline="") as fh:
        first = fh.readline()
        provenance = ""
        if first.startswith("#"):
            provenance = first.split(":", 1)[1].strip() if ":" in first else ""
            header = fh.readline()
        else:
            header = first
        cols = header.strip().split(",")
        dim = cols.index("tag")
        coords, tags, normals, observed = [], [], [], []
        for row in csv.reader(fh):
            if not row:
                continue
            vals = [float(v) if v else np.nan for v in row[:dim]]
            coords.append(vals)
            tags.append(row[dim])
            normals.append([float(v) if v else np.nan for v in row[dim + 1 : 2 * dim + 1]])
            observed.append([float(v) if v else np.nan for v in row[2 * dim + 1 : 3 * dim + 1]])
    cloud = PointCloud(dim, np.array(coords), tags, np.array(normals), np.array(observed))
    return cloud, provenance
