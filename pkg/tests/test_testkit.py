import numpy as np
import pytest

from panolidar.errors import PlacementOutOfFov
from panolidar.pointcloud import Point3, PointCloud
from panolidar.projection import (
    SensorIntrinsics,
    azimuth_of_point,
    project_cloud,
)
from panolidar.testkit import (
    Placement,
    SyntheticScene,
    generate_cloud,
    load_scene,
    oracle_project,
    point_at,
)


class TestPointAt:
    def test_polar_to_cartesian_at_axes(self):
        p = point_at(5.0, 0.0, 0.0)
        assert (p.x, p.y, p.z) == (5.0, 0.0, 0.0)

    def test_minus_90_lands_on_positive_y(self):
        # Inverts the projection convention; oracle: azimuth round-trip.
        p = point_at(5.0, -90.0, 0.0)
        assert abs(p.x) < 1e-12
        assert p.y == pytest.approx(5.0)
        assert azimuth_of_point(p) == pytest.approx(-90.0)

    @pytest.mark.parametrize("r", [0.8, 4.9, 6.6, 11.0, 73.123])
    @pytest.mark.parametrize("theta", [-176.6, -101.7, -29.8, 0.0, 45.3, 88.1, 179.9])
    def test_horizontal_range_exact(self, r, theta):
        p = point_at(r, theta, 3.0)
        assert float(np.sqrt(p.x * p.x + p.y * p.y)) == r

    def test_azimuth_round_trip(self):
        for theta in np.linspace(-180.0, 179.9, 37):
            p = point_at(10.0, float(theta), 0.0)
            assert azimuth_of_point(p) == pytest.approx(float(theta), abs=1e-9)

    def test_exactness_over_many_random_pairs(self):
        rng = np.random.default_rng(7)
        for _ in range(3000):
            r = float(rng.uniform(0.3, 200.0))
            theta = float(rng.uniform(-180.0, 180.0))
            p = point_at(r, theta)
            assert float(np.sqrt(p.x * p.x + p.y * p.y)) == r


class TestGenerateCloud:
    def test_single_point_placement(self, os1):
        scene = SyntheticScene(placements=(Placement("a", 5.0, 0.0, 0.0, count=1),))
        cloud = generate_cloud(scene, os1)
        assert len(cloud) == 1
        assert (cloud[0].x, cloud[0].y, cloud[0].z) == (5.0, 0.0, 0.0)

    def test_deterministic_for_seed(self, os1):
        scene = SyntheticScene(
            placements=(Placement("a", 5.0, 30.0, 2.0, count=50, jitter_deg=1.5),),
            seed=123,
        )
        a = generate_cloud(scene, os1)
        b = generate_cloud(scene, os1)
        assert np.array_equal(a.xyz, b.xyz)

    def test_jitter_preserves_exact_range(self, os1):
        scene = SyntheticScene(
            placements=(Placement("a", 7.25, -101.7, 0.0, count=80, jitter_deg=2.0),),
            seed=5,
        )
        cloud = generate_cloud(scene, os1)
        horiz = np.sqrt(cloud.xyz[:, 0] ** 2 + cloud.xyz[:, 1] ** 2)
        assert np.all(horiz == 7.25)

    def test_first_point_is_unjittered(self, os1):
        scene = SyntheticScene(
            placements=(Placement("a", 5.0, -90.0, 0.0, count=10, jitter_deg=3.0),),
            seed=9,
        )
        p = generate_cloud(scene, os1)[0]
        assert azimuth_of_point(p) == pytest.approx(-90.0)

    def test_out_of_fov_placement_rejected(self, os1):
        scene = SyntheticScene(placements=(Placement("a", 5.0, 0.0, 40.0),))
        with pytest.raises(PlacementOutOfFov):
            generate_cloud(scene, os1)

    def test_jitter_band_must_stay_in_fov(self, os1):
        scene = SyntheticScene(
            placements=(Placement("a", 5.0, 0.0, 22.0, count=5, jitter_deg=1.0),)
        )
        with pytest.raises(PlacementOutOfFov):
            generate_cloud(scene, os1)


class TestLoadScene:
    def test_toml_round_trip(self, tmp_path):
        path = tmp_path / "scene.toml"
        path.write_text(
            'seed = 11\n'
            '[[placements]]\n'
            'label = "person"\n'
            'range_m = 4.9\n'
            'azimuth_deg = -101.7\n'
            'elevation_deg = 1.5\n'
            'count = 40\n'
            'jitter_deg = 1.0\n'
        )
        scene = load_scene(path)
        assert scene.seed == 11
        assert scene.placements == (
            Placement("person", 4.9, -101.7, 1.5, count=40, jitter_deg=1.0),
        )


class TestOracleProject:
    def test_oracle_equals_fast_path_on_seeded_clouds(self, tiny):
        rng = np.random.default_rng(0)
        for _ in range(10):
            n = int(rng.integers(0, 300))
            xyz = rng.uniform(-40, 40, size=(n, 3))
            cloud = PointCloud(xyz=xyz)
            fast = project_cloud(cloud, tiny)
            slow = oracle_project(cloud, tiny)
            assert np.array_equal(fast.range, slow.range)
            assert vars(fast.stats) == vars(slow.stats)

    def test_oracle_handles_channels(self, tiny):
        points = [
            Point3(1.2, 1.6, 0.0, ambient=7),
            Point3(6.0, 8.0, 0.0, ambient=70),  # same pixel, farther
        ]
        cloud = PointCloud.from_points(points)
        fast = project_cloud(cloud, tiny)
        slow = oracle_project(cloud, tiny)
        assert np.array_equal(fast.channels["ambient"], slow.channels["ambient"])
        assert slow.channels["ambient"].max() == 7

    def test_empty_cloud(self, tiny):
        pano = oracle_project(PointCloud.from_points([]), tiny)
        assert not pano.range.any()

    def test_duplicate_point_idempotent(self, tiny):
        single = PointCloud.from_points([Point3(3.0, 4.0, 0.0)])
        doubled = PointCloud.from_points([Point3(3.0, 4.0, 0.0)] * 2)
        assert np.array_equal(
            oracle_project(single, tiny).range, oracle_project(doubled, tiny).range
        )
