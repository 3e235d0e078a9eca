"""Synthetic scenes and reference implementations used by the test suite.

Shipped with the package so every derived expected value in the tests can
be recomputed from first principles by any contributor. Nothing here is
tuned for speed: :func:`oracle_project` trades performance for being an
obviously-correct restatement of the projection rule.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import PlacementOutOfFov
from .pointcloud import Point3, PointCloud
from .projection import (
    PanoramaImage,
    ProjectionStats,
    SensorIntrinsics,
    azimuth_of_point,
    column_of_azimuth,
    elevation_of_point,
    row_of_elevation,
)


@dataclass(frozen=True)
class Placement:
    """A cluster of returns at an exact horizontal range and azimuth.

    ``jitter_deg`` spreads the cluster tangentially (in azimuth and
    elevation); the horizontal range of every generated point stays
    exactly ``range_m``.
    """

    label: str
    range_m: float
    azimuth_deg: float
    elevation_deg: float = 0.0
    count: int = 1
    jitter_deg: float = 0.0


@dataclass(frozen=True)
class SyntheticScene:
    placements: tuple[Placement, ...]
    seed: int = 0


def load_scene(path: str | Path) -> SyntheticScene:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    placements = tuple(
        Placement(
            label=str(p["label"]),
            range_m=float(p["range_m"]),
            azimuth_deg=float(p["azimuth_deg"]),
            elevation_deg=float(p.get("elevation_deg", 0.0)),
            count=int(p.get("count", 1)),
            jitter_deg=float(p.get("jitter_deg", 0.0)),
        )
        for p in data.get("placements", [])
    )
    return SyntheticScene(placements=placements, seed=int(data.get("seed", 0)))


def point_at(range_m: float, azimuth_deg: float, elevation_deg: float = 0.0) -> Point3:
    """Cartesian point at an exact horizontal range, azimuth and elevation.

    Inverts the projection's azimuth convention (azimuth = -atan2(y, x)),
    then adjusts x, y by ulps so that sqrt(x^2 + y^2) reproduces
    ``range_m`` bit-exactly despite the trigonometry's rounding; the
    azimuth moves by under 1e-9 degrees in the process.
    """
    base = float(np.radians(azimuth_deg))
    # Occasionally no float pair on the exact ray rounds to range_m; a
    # re-rotation by 2^-40 rad reshuffles the low bits and retries.
    for j in (0, 1, -1, 2, -2, 3, -3, 4, -4, 5, -5):
        theta = base + j * 2.0**-40
        x = range_m * float(np.cos(theta))
        y = -range_m * float(np.sin(theta))
        snapped = _snap_to_range(x, y, range_m)
        if snapped is not None:
            x, y = snapped
            z = float(np.sqrt(x * x + y * y)) * float(np.tan(np.radians(elevation_deg)))
            return Point3(x, y, z)
    raise ValueError(f"could not hit range {range_m} exactly at azimuth {azimuth_deg}")


def _h(a: float, b: float) -> float:
    return float(np.sqrt(a * a + b * b))


def _scan_major(minor: float, major_sign: float, r: float) -> float | None:
    """Solve the larger coordinate from the smaller; probe ulp neighbors."""
    base = float(np.sqrt(max(r * r - minor * minor, 0.0)))
    center = major_sign * base if base > 0 else major_sign * r
    cand = center
    for _ in range(6):
        if _h(cand, minor) == r:
            return cand
        cand = np.nextafter(cand, 0.0)
    cand = np.nextafter(center, major_sign * np.inf)
    for _ in range(6):
        if _h(cand, minor) == r:
            return cand
        cand = np.nextafter(cand, major_sign * np.inf)
    return None


def _snap_to_range(x: float, y: float, r: float) -> tuple[float, float] | None:
    """Nearby float pair whose hypotenuse is exactly r, or None."""
    if _h(x, y) == r:
        return x, y
    swap = abs(x) < abs(y)
    if swap:
        x, y = y, x
    sx = 1.0 if x >= 0 else -1.0
    # Minor coordinate fully absorbed by rounding: major must be exactly r.
    if y * y < np.spacing(r * r) / 4 and _h(sx * r, y) == r:
        return (sx * r, y) if not swap else (y, sx * r)
    y0 = y
    if y0 == 0.0:
        return None
    # Each minor-coordinate step shifts the rounded sum by about one ulp.
    step = max(np.spacing(x * x) / (2 * abs(y0)), np.spacing(abs(y0)))
    for phase in range(60):
        if phase:
            k = (phase + 1) // 2
            y = y0 + (step * k if phase % 2 else -step * k)
        major = _scan_major(y, sx, r)
        if major is not None:
            return (major, y) if not swap else (y, major)
    return None


def generate_cloud(scene: SyntheticScene, intr: SensorIntrinsics) -> PointCloud:
    """Deterministic cloud for a scene; seed fixed, output reproducible.

    The first point of each placement sits exactly at the placement's
    azimuth and elevation, so the target pixel always holds a return.
    Raises :class:`PlacementOutOfFov` when a placement's elevation band
    (elevation ± jitter) leaves the sensor FOV.
    """
    rng = np.random.default_rng(scene.seed)
    points: list[Point3] = []
    for placement in scene.placements:
        lo = placement.elevation_deg - placement.jitter_deg
        hi = placement.elevation_deg + placement.jitter_deg
        if lo < intr.elevation_min or hi > intr.elevation_max:
            raise PlacementOutOfFov(
                f"placement {placement.label!r} elevation band [{lo}, {hi}] outside "
                f"[{intr.elevation_min}, {intr.elevation_max}]"
            )
        for i in range(placement.count):
            if i == 0 or placement.jitter_deg == 0.0:
                d_az = d_el = 0.0
            else:
                d_az = float(rng.uniform(-placement.jitter_deg, placement.jitter_deg))
                d_el = float(rng.uniform(-placement.jitter_deg, placement.jitter_deg))
            theta = placement.azimuth_deg + d_az
            if theta >= 180.0:
                theta -= 360.0
            elif theta < -180.0:
                theta += 360.0
            points.append(point_at(placement.range_m, theta, placement.elevation_deg + d_el))
    return PointCloud.from_points(points, source=f"synthetic#seed={scene.seed}")


def oracle_project(
    cloud: PointCloud, intr: SensorIntrinsics, range_metric: str = "horizontal"
) -> PanoramaImage:
    """Naive reference rasterizer, point by point through the scalar helpers.

    For each pixel, the minimum-range point among all points mapping there
    wins, ties broken by input order. Matches the fast path bit for bit on
    small clouds; intended for inputs up to about a thousand points.
    """
    hits: dict[tuple[int, int], list[tuple[float, int]]] = {}
    stats = ProjectionStats()
    for i in range(len(cloud)):
        p = cloud[i]
        if p.is_degenerate:
            stats.degenerate += 1
            continue
        phi = elevation_of_point(p)
        v = row_of_elevation(phi, intr)
        if v is None:
            stats.out_of_fov += 1
            continue
        u = column_of_azimuth(azimuth_of_point(p), intr)
        if range_metric == "horizontal":
            r = float(np.sqrt(p.x * p.x + p.y * p.y))
        else:
            r = float(np.sqrt(p.x * p.x + p.y * p.y + p.z * p.z))
        hits.setdefault((u, v), []).append((r, i))
        stats.projected += 1

    range_img = np.zeros((intr.height, intr.width), dtype=np.float64)
    chan_imgs = {name: np.zeros((intr.height, intr.width), dtype=np.uint16) for name in cloud.channels}
    for (u, v), candidates in hits.items():
        r, winner = min(candidates)
        range_img[v, u] = r
        for name, src in cloud.channels.items():
            chan_imgs[name][v, u] = src[winner]
    return PanoramaImage(intrinsics=intr, range=range_img, channels=chan_imgs, stats=stats)
