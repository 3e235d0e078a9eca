"""Spherical projection of a point cloud into a panoramic raster.

The panorama is an equirectangular grid: columns are uniform in azimuth
over the full 360 degrees with the image center at 0 degrees and the
leftmost edge at -180 degrees, rows are uniform in elevation between the
sensor's vertical field-of-view bounds. Each pixel of the range channel
stores the horizontal range sqrt(x^2 + y^2) of the nearest return mapped
there; 0.0 is reserved as the no-return sentinel.

Angle helpers in this module intentionally use numpy scalar ufuncs
(np.arctan2, np.degrees) rather than the math module: numpy scalar and
array ufuncs share kernels bit-for-bit, which keeps the scalar reference
path and the vectorized fast path in exact agreement.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import DegeneratePoint
from .pointcloud import CHANNEL_NAMES, Point3, PointCloud

RANGE_METRICS = ("horizontal", "euclidean")


@dataclass(frozen=True)
class SensorIntrinsics:
    """Raster geometry of the panoramic sensor.

    ``width`` must be divisible by 8: the four directional views are
    centered on the cardinal directions, so their boundaries fall on
    eighth-of-width columns. ``range_quantum`` is the meters-per-count
    step used when the range channel is stored as 16-bit imagery.
    """

    width: int = 2048
    height: int = 128
    elevation_max: float = 22.5
    elevation_min: float = -22.5
    range_quantum: float = 1.0 / 256.0

    def __post_init__(self) -> None:
        if self.width < 4 or self.width % 8 != 0:
            raise ValueError(f"width must be >= 4 and divisible by 8, got {self.width}")
        if self.height < 1:
            raise ValueError(f"height must be >= 1, got {self.height}")
        if not self.elevation_max > self.elevation_min:
            raise ValueError(
                f"elevation_max ({self.elevation_max}) must exceed "
                f"elevation_min ({self.elevation_min})"
            )
        if not self.range_quantum > 0:
            raise ValueError("range_quantum must be positive")

    @classmethod
    def profile(cls, name: str) -> "SensorIntrinsics":
        if name == "os1-128":
            return cls()
        raise ValueError(f"unknown intrinsics profile {name!r}")

    @property
    def elevation_span(self) -> float:
        return self.elevation_max - self.elevation_min


@dataclass(frozen=True)
class PixelCoord:
    """Column/row pair; u in [0, W), v in [0, H)."""

    u: int
    v: int


@dataclass
class ProjectionStats:
    projected: int = 0
    out_of_fov: int = 0
    degenerate: int = 0


@dataclass
class PanoramaImage:
    """Multi-channel panoramic raster.

    ``range`` is an (H, W) float64 array of meters with 0.0 meaning no
    return; optional uint16 channels share the same shape. Instances are
    immutable after construction and safe to share across threads.
    """

    intrinsics: SensorIntrinsics
    range: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    stats: ProjectionStats = field(default_factory=ProjectionStats)

    def __post_init__(self) -> None:
        shape = (self.intrinsics.height, self.intrinsics.width)
        self.range = np.ascontiguousarray(self.range, dtype=np.float64)
        if self.range.shape != shape:
            raise ValueError(f"range raster shape {self.range.shape} != {shape}")
        self.range.flags.writeable = False
        for name, arr in list(self.channels.items()):
            arr = np.ascontiguousarray(arr, dtype=np.uint16)
            if arr.shape != shape:
                raise ValueError(f"channel {name!r} shape {arr.shape} != {shape}")
            arr.flags.writeable = False
            self.channels[name] = arr


def azimuth_of_point(p: Point3) -> float:
    """Azimuth of a return, degrees in [-180, 180).

    0 is straight ahead (+x); the sensor's left side (+y) carries negative
    angles so that the panorama reads left-to-right from -180 to +180.
    """
    if p.x == 0.0 and p.y == 0.0:
        raise DegeneratePoint("azimuth undefined for x = y = 0")
    theta = -float(np.degrees(np.arctan2(p.y, p.x)))
    if theta >= 180.0:
        theta -= 360.0
    return theta


def elevation_of_point(p: Point3) -> float:
    """Elevation above the sensor's horizontal plane, degrees."""
    horiz = np.sqrt(p.x * p.x + p.y * p.y)
    return float(np.degrees(np.arctan2(p.z, horiz)))


def column_of_azimuth(theta: float, intr: SensorIntrinsics) -> int:
    """Panorama column whose azimuth bin contains ``theta``.

    theta just below +180 can round up to column W; clamping (rather than
    wrapping to -180) keeps the recovered azimuth within one column.
    """
    w = intr.width
    u = int(np.floor(w * theta / 360.0 + w / 2))
    return min(max(u, 0), w - 1)


def azimuth_of_column(u: int, intr: SensorIntrinsics) -> float:
    """Azimuth of a panorama column: 360 * (u - W/2) / W degrees."""
    return 360.0 * (u - intr.width / 2) / intr.width


def row_of_elevation(phi: float, intr: SensorIntrinsics) -> int | None:
    """Panorama row for an elevation angle, or None when outside the FOV.

    The grid is uniform in elevation; the top row (v = 0) starts at
    elevation_max and the bottom row ends at elevation_min.
    """
    if phi > intr.elevation_max or phi < intr.elevation_min:
        return None
    h = intr.height
    v = int(np.floor((intr.elevation_max - phi) / intr.elevation_span * h))
    return min(v, h - 1)


def elevation_of_row(v: int, intr: SensorIntrinsics) -> float:
    """Elevation at the top edge of row ``v`` (inverse of row_of_elevation)."""
    return intr.elevation_max - v * (intr.elevation_span / intr.height)


def pixel_of_point(p: Point3, intr: SensorIntrinsics) -> PixelCoord | None:
    """Pixel a return maps to, or None when out of the vertical FOV."""
    theta = azimuth_of_point(p)
    phi = elevation_of_point(p)
    v = row_of_elevation(phi, intr)
    if v is None:
        return None
    return PixelCoord(column_of_azimuth(theta, intr), v)


def project_cloud(
    cloud: PointCloud,
    intr: SensorIntrinsics,
    range_metric: str = "horizontal",
) -> PanoramaImage:
    """Rasterize a cloud: nearest return wins each pixel.

    Ties on range are broken by input order (first point wins), so the
    result is deterministic for a given cloud. The winning point also
    supplies any optional channels. ``range_metric`` selects what the
    range channel stores; "horizontal" is the standard sqrt(x^2 + y^2),
    "euclidean" is the opt-in full 3D distance.
    """
    if range_metric not in RANGE_METRICS:
        raise ValueError(f"range_metric must be one of {RANGE_METRICS}")
    w, h = intr.width, intr.height
    stats = ProjectionStats()
    range_img = np.zeros((h, w), dtype=np.float64)
    chan_imgs = {name: np.zeros((h, w), dtype=np.uint16) for name in cloud.channels}

    if len(cloud) == 0:
        return PanoramaImage(intrinsics=intr, range=range_img, channels=chan_imgs, stats=stats)

    xs, ys, zs = cloud.xyz[:, 0], cloud.xyz[:, 1], cloud.xyz[:, 2]

    degenerate = (xs == 0.0) & (ys == 0.0)
    stats.degenerate = int(degenerate.sum())

    # Expressions below mirror the scalar helpers term for term; see the
    # module docstring for why that matters.
    horiz = np.sqrt(xs * xs + ys * ys)
    theta = -np.degrees(np.arctan2(ys, xs))
    theta = np.where(theta >= 180.0, theta - 360.0, theta)
    phi = np.degrees(np.arctan2(zs, horiz))

    in_fov = (phi <= intr.elevation_max) & (phi >= intr.elevation_min) & ~degenerate
    stats.out_of_fov = len(cloud) - stats.degenerate - int(in_fov.sum())
    if not in_fov.any():
        return PanoramaImage(intrinsics=intr, range=range_img, channels=chan_imgs, stats=stats)

    idx = np.nonzero(in_fov)[0]
    u = np.floor(w * theta[idx] / 360.0 + w / 2).astype(np.int64)
    np.clip(u, 0, w - 1, out=u)
    v = np.floor((intr.elevation_max - phi[idx]) / intr.elevation_span * h).astype(np.int64)
    np.minimum(v, h - 1, out=v)
    if range_metric == "horizontal":
        rng = horiz[idx]
    else:
        rng = np.sqrt(xs[idx] * xs[idx] + ys[idx] * ys[idx] + zs[idx] * zs[idx])
    stats.projected = len(idx)

    pix = v * w + u
    # Group points by pixel with a stable integer sort (radix, no float
    # comparisons), then take each group's minimum range; the first point
    # achieving it wins, so ties break on input order.
    order = np.argsort(pix, kind="stable")
    pix_sorted = pix[order]
    rng_sorted = rng[order]
    m = len(order)
    starts = np.ones(m, dtype=bool)
    starts[1:] = pix_sorted[1:] != pix_sorted[:-1]
    group_starts = np.nonzero(starts)[0]
    group_min = np.minimum.reduceat(rng_sorted, group_starts)
    group_id = np.cumsum(starts) - 1
    positions = np.where(rng_sorted == group_min[group_id], np.arange(m), m)
    winners = order[np.minimum.reduceat(positions, group_starts)]

    flat = range_img.reshape(-1)
    flat[pix[winners]] = rng[winners]
    for name, src in cloud.channels.items():
        chan_imgs[name].reshape(-1)[pix[winners]] = src[idx[winners]]

    return PanoramaImage(intrinsics=intr, range=range_img, channels=chan_imgs, stats=stats)


# ---------------------------------------------------------------------------
# Persistence: 16-bit grayscale PNG per channel + TOML intrinsics
# ---------------------------------------------------------------------------


def quantize_range(range_img: np.ndarray, quantum: float) -> np.ndarray:
    """Encode meters as 16-bit counts: round(range / quantum), clipped."""
    counts = np.round(range_img / quantum)
    return np.clip(counts, 0, 65535).astype(np.uint16)


def dequantize_range(counts: np.ndarray, quantum: float) -> np.ndarray:
    return counts.astype(np.float64) * quantum


def write_panorama(pano: PanoramaImage, out_dir: str | Path, stem: str) -> dict[str, Path]:
    """Persist all channels as 16-bit PNGs plus the intrinsics TOML.

    Returns a map from artifact name ("range", "ambient", ...,
    "intrinsics") to the written path.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}

    range_path = out_dir / f"{stem}_range.png"
    Image.fromarray(quantize_range(pano.range, pano.intrinsics.range_quantum)).save(range_path)
    written["range"] = range_path

    for name in sorted(pano.channels):
        p = out_dir / f"{stem}_{name}.png"
        Image.fromarray(pano.channels[name]).save(p)
        written[name] = p

    intr_path = out_dir / f"{stem}_intrinsics.toml"
    write_intrinsics(pano.intrinsics, intr_path)
    written["intrinsics"] = intr_path
    return written


def load_panorama(range_png: str | Path, intrinsics_path: str | Path) -> PanoramaImage:
    """Load a panorama persisted by :func:`write_panorama`.

    Sibling channel PNGs (``{stem}_ambient.png`` etc., where the range file
    is ``{stem}_range.png``) are picked up automatically. Range precision
    is limited to the quantum it was stored with.
    """
    range_png = Path(range_png)
    intr = read_intrinsics(intrinsics_path)
    counts = np.asarray(Image.open(range_png), dtype=np.uint16)
    pano_range = dequantize_range(counts, intr.range_quantum)

    channels: dict[str, np.ndarray] = {}
    name = range_png.name
    if name.endswith("_range.png"):
        stem = name[: -len("_range.png")]
        for chan in CHANNEL_NAMES:
            p = range_png.with_name(f"{stem}_{chan}.png")
            if p.is_file():
                channels[chan] = np.asarray(Image.open(p), dtype=np.uint16)
    return PanoramaImage(intrinsics=intr, range=pano_range, channels=channels)


def write_intrinsics(intr: SensorIntrinsics, path: str | Path) -> None:
    text = (
        f"width = {intr.width}\n"
        f"height = {intr.height}\n"
        f"elevation_max_deg = {intr.elevation_max!r}\n"
        f"elevation_min_deg = {intr.elevation_min!r}\n"
        f"range_quantum_m = {intr.range_quantum!r}\n"
    )
    Path(path).write_text(text, encoding="utf-8")


def read_intrinsics(path: str | Path) -> SensorIntrinsics:
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    try:
        return SensorIntrinsics(
            width=int(data["width"]),
            height=int(data["height"]),
            elevation_max=float(data["elevation_max_deg"]),
            elevation_min=float(data["elevation_min_deg"]),
            range_quantum=float(data["range_quantum_m"]),
        )
    except KeyError as exc:
        raise ValueError(f"{path}: missing intrinsics key {exc}") from exc
