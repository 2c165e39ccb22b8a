"""Point clouds: samplers, tags, normals, monitoring picks, noise, CSV."""

import numpy as np
import pytest

from pinnload.sampling import (
    PointCloud,
    add_noise,
    box_cloud,
    full_ring_cloud,
    pick_monitoring,
    quarter_annulus_cloud,
    read_cloud_csv,
    rectangle_cloud,
    sample_domain,
    write_cloud_csv,
)


class TestQuarterAnnulus:
    def test_collocation_count_matches_grid(self):
        cloud = quarter_annulus_cloud(1.0, 5.0, 100, 100, 10)
        assert len(cloud.indices("collocation")) == 10000

    def test_collocation_strictly_inside(self):
        cloud = quarter_annulus_cloud(1.0, 5.0, 12, 12, 8)
        col = cloud.coords_of("collocation")
        r = np.linalg.norm(col, axis=1)
        assert np.all(r > 1.0) and np.all(r < 5.0)
        assert np.all(col > 0.0)

    def test_boundary_points_on_their_boundaries(self):
        cloud = quarter_annulus_cloud(1.0, 5.0, 6, 6, 30)
        inner = cloud.coords_of("neumann-segment-1")
        np.testing.assert_allclose(np.linalg.norm(inner, axis=1), 1.0, atol=1e-12)
        outer = cloud.coords_of("free-bc")
        np.testing.assert_allclose(np.linalg.norm(outer, axis=1), 5.0, atol=1e-12)

    def test_inner_normals_point_to_center(self):
        cloud = quarter_annulus_cloud(1.0, 5.0, 6, 6, 30)
        idx = cloud.indices("neumann-segment-1")
        radial = cloud.coords[idx] / np.linalg.norm(cloud.coords[idx], axis=1, keepdims=True)
        np.testing.assert_allclose(np.sum(cloud.normals[idx] * radial, axis=1), -1.0,
                                   atol=1e-12)

    def test_tags_partition(self):
        cloud = quarter_annulus_cloud(1.0, 5.0, 6, 6, 10)
        assert sum(cloud.counts().values()) == cloud.n
        cloud.validate()

    def test_invalid_geometry_rejected(self):
        with pytest.raises(ValueError):
            quarter_annulus_cloud(5.0, 1.0, 6, 6, 10)


class TestRectangle:
    def test_boundary_points_satisfy_edge_equations(self):
        cloud = rectangle_cloud(((0.0, 2.0), (0.0, 2.0)), 6, 6, 15, {
            "left": ("dirichlet", (0.0, 0.0)),
            "right": ("neumann", (1,)),
            "top": ("free",),
            "bottom": ("free",),
        })
        for i, tag in enumerate(cloud.tags):
            if tag == "collocation":
                continue
            x, y = cloud.coords[i]
            assert min(abs(x), abs(y), abs(x - 2.0), abs(y - 2.0)) == 0.0

    def test_neumann_split_into_equal_segments(self):
        cloud = rectangle_cloud(((-2.0, 2.0), (-1.0, 1.0)), 6, 6, 9, {
            "right": ("neumann", (1, 2)),
        })
        a = cloud.coords_of("neumann-segment-1")
        b = cloud.coords_of("neumann-segment-2")
        assert np.all(a[:, 1] < 0) and np.all(b[:, 1] > 0)
        assert np.all(a[:, 0] == 2.0) and np.all(b[:, 0] == 2.0)


class TestBoxAndRing:
    def test_box_face_roles_and_normals(self):
        cloud = box_cloud(((0.0, 10.0), (-1.0, 1.0), (-1.0, 1.0)), (6, 3, 3), 4, {
            "x1": ("neumann", (1,)),
            "y0": ("free",), "y1": ("free",), "z0": ("free",), "z1": ("free",),
        })
        cloud.validate()
        idx = cloud.indices("neumann-segment-1")
        assert np.all(cloud.coords[idx][:, 0] == 10.0)
        np.testing.assert_array_equal(cloud.normals[idx], np.tile([1.0, 0, 0], (len(idx), 1)))

    def test_ring_outer_normals_are_radial(self):
        cloud = full_ring_cloud(3.5, 4.0, 4, 40, 30,
                                {1: [(0.0, np.pi)], 2: [(np.pi, 2 * np.pi)]}, 20)
        for seg in (1, 2):
            idx = cloud.indices(f"neumann-segment-{seg}")
            radial = cloud.coords[idx] / np.linalg.norm(cloud.coords[idx], axis=1,
                                                        keepdims=True)
            np.testing.assert_allclose(np.sum(cloud.normals[idx] * radial, axis=1), 1.0,
                                       atol=1e-12)

    def test_ring_pins_are_masked_dirichlet_points(self):
        cloud = full_ring_cloud(3.5, 4.0, 3, 24, 16, {1: [(0.0, 2 * np.pi)]}, 12,
                                pins=[((0.0, -1.0), (0.0, 0.0)), ((0.0, 1.0), (0.0, None))])
        idx = cloud.indices("dirichlet")
        assert len(idx) == 2
        obs = cloud.observed[idx]
        assert np.isnan(obs[1, 1]) and obs[1, 0] == 0.0
        np.testing.assert_allclose(np.linalg.norm(cloud.coords[idx], axis=1), 4.0)

    def test_sample_domain_dispatch(self):
        cloud = sample_domain("quarter-annulus",
                              {"r_inner": 1.0, "r_outer": 5.0, "n_r": 4, "n_beta": 4,
                               "n_edge": 6})
        assert cloud.n > 0
        with pytest.raises(ValueError, match="unknown domain"):
            sample_domain("hexagon", {})


class TestPickMonitoring:
    def _cloud(self):
        return quarter_annulus_cloud(1.0, 5.0, 10, 10, 8)

    def test_all_candidates_is_identity_subset(self):
        cloud = self._cloud()
        sub = pick_monitoring(cloud, 100, seed=0)
        np.testing.assert_array_equal(
            np.sort(sub.coords, axis=0), np.sort(cloud.coords_of("collocation"), axis=0)
        )
        assert all(t == "data" for t in sub.tags)

    def test_different_seeds_differ(self):
        cloud = self._cloud()
        a = pick_monitoring(cloud, 20, seed=1)
        b = pick_monitoring(cloud, 20, seed=2)
        assert not np.array_equal(a.coords, b.coords)

    def test_same_seed_is_identical(self):
        cloud = self._cloud()
        a = pick_monitoring(cloud, 20, seed=7)
        b = pick_monitoring(cloud, 20, seed=7)
        np.testing.assert_array_equal(a.coords, b.coords)

    def test_too_many_points_rejected(self):
        with pytest.raises(ValueError):
            pick_monitoring(self._cloud(), 101, seed=0)


class TestAddNoise:
    def test_zero_level_is_bitwise_copy(self, rng):
        clean = rng.normal(size=(50, 2))
        noisy = add_noise(clean, 0.0, seed=0)
        assert np.array_equal(noisy, clean)
        assert noisy is not clean

    def test_relative_l2_level_is_exact(self, rng):
        clean = rng.normal(size=(200, 3))
        noisy = add_noise(clean, 0.10, seed=5)
        for c in range(3):
            rel = np.linalg.norm(noisy[:, c] - clean[:, c]) / np.linalg.norm(clean[:, c])
            assert abs(rel - 0.10) < 1e-12

    def test_per_component_levels(self, rng):
        clean = rng.normal(size=(300, 2))
        noisy = add_noise(clean, (0.1125, 0.1006), seed=2)
        rel_x = np.linalg.norm(noisy[:, 0] - clean[:, 0]) / np.linalg.norm(clean[:, 0])
        rel_y = np.linalg.norm(noisy[:, 1] - clean[:, 1]) / np.linalg.norm(clean[:, 1])
        assert abs(rel_x - 0.1125) < 1e-12
        assert abs(rel_y - 0.1006) < 1e-12

    def test_deterministic_per_seed(self, rng):
        clean = rng.normal(size=(40, 2))
        assert np.array_equal(add_noise(clean, 0.1, seed=9), add_noise(clean, 0.1, seed=9))

    def test_zero_field_with_positive_level_rejected(self):
        with pytest.raises(ValueError):
            add_noise(np.zeros((10, 2)), 0.1, seed=0)


class TestCsvRoundTrip:
    def test_bit_exact_round_trip(self, tmp_path, rng):
        cloud = quarter_annulus_cloud(1.0, 5.0, 5, 5, 6)
        data = PointCloud(
            2,
            rng.uniform(2, 3, (7, 2)),
            ["data"] * 7,
            np.full((7, 2), np.nan),
            rng.normal(size=(7, 2)) * 1e-4,
        )
        full = PointCloud.concat([cloud, data])
        path = tmp_path / "cloud.csv"
        write_cloud_csv(full, path, "oracle:cylinder noise=0 seed=0")
        back, provenance = read_cloud_csv(path)
        assert provenance == "oracle:cylinder noise=0 seed=0"
        assert back.tags == full.tags
        np.testing.assert_array_equal(back.coords, full.coords)
        np.testing.assert_array_equal(np.isnan(back.normals), np.isnan(full.normals))
        np.testing.assert_array_equal(
            back.normals[~np.isnan(back.normals)], full.normals[~np.isnan(full.normals)]
        )
        np.testing.assert_array_equal(
            back.observed[~np.isnan(back.observed)], full.observed[~np.isnan(full.observed)]
        )

    def test_three_d_round_trip(self, tmp_path):
        cloud = box_cloud(((0.0, 10.0), (-1.0, 1.0), (-1.0, 1.0)), (4, 2, 2), 3, {
            "x1": ("neumann", (1,)), "y0": ("free",),
        })
        path = tmp_path / "cloud3d.csv"
        write_cloud_csv(cloud, path, "test")
        back, _ = read_cloud_csv(path)
        assert back.dim == 3
        np.testing.assert_array_equal(back.coords, cloud.coords)
