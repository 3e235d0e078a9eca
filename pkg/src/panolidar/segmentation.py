"""Quartering the panorama into four directional views.

Each segment spans 90 degrees and is centered on a cardinal direction:
Front on 0, Left on -90, Right on +90 and Back on the ±180 seam. Back
therefore assembles from two column runs of the panorama (the rightmost
eighth followed by the leftmost eighth) into one contiguous image, and
``column_map`` records which panorama column each segment column came
from so results can be mapped back exactly.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import BadWidth, OutOfBounds
from .projection import PanoramaImage, PixelCoord, SensorIntrinsics


class SegmentLabel(enum.Enum):
    LEFT = "left"
    FRONT = "front"
    RIGHT = "right"
    BACK = "back"

    def __str__(self) -> str:
        return self.value


# Display / dispatch order used everywhere a fixed ordering matters.
SEGMENT_ORDER = (SegmentLabel.LEFT, SegmentLabel.FRONT, SegmentLabel.RIGHT, SegmentLabel.BACK)

# Azimuth interval per label, half-open [lo, hi); Back wraps the seam.
_AZIMUTH_RANGES = {
    SegmentLabel.LEFT: (-135.0, -45.0),
    SegmentLabel.FRONT: (-45.0, 45.0),
    SegmentLabel.RIGHT: (45.0, 135.0),
}


def segment_start(label: SegmentLabel, intr: SensorIntrinsics) -> int:
    """First panorama column of a segment (Back wraps modulo W)."""
    eighth = intr.width // 8
    return {
        SegmentLabel.LEFT: eighth,
        SegmentLabel.FRONT: 3 * eighth,
        SegmentLabel.RIGHT: 5 * eighth,
        SegmentLabel.BACK: 7 * eighth,
    }[label]


@dataclass
class Segment:
    """One 90-degree view: a W/4-wide slice of every panorama channel.

    ``column_map[u_seg]`` is the panorama column that segment column came
    from; only Back has a non-contiguous map.
    """

    label: SegmentLabel
    intrinsics: SensorIntrinsics
    range: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    column_map: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def width(self) -> int:
        return self.range.shape[1]

    @property
    def height(self) -> int:
        return self.range.shape[0]


def split_panorama(pano: PanoramaImage) -> dict[SegmentLabel, Segment]:
    """Split into the four directional segments.

    Every panorama column lands in exactly one segment. Raises
    :class:`BadWidth` when the width cannot be quartered on half-quarter
    boundaries (width not divisible by 8).
    """
    w = pano.intrinsics.width
    if w % 8 != 0:
        raise BadWidth(f"panorama width {w} not divisible by 8")

    segments: dict[SegmentLabel, Segment] = {}
    for label in SEGMENT_ORDER:
        start = segment_start(label, pano.intrinsics)
        cols = (start + np.arange(w // 4, dtype=np.int64)) % w
        rng = pano.range[:, cols].copy()
        rng.flags.writeable = False
        chans = {}
        for name, arr in pano.channels.items():
            sub = arr[:, cols].copy()
            sub.flags.writeable = False
            chans[name] = sub
        cols.flags.writeable = False
        segments[label] = Segment(
            label=label,
            intrinsics=pano.intrinsics,
            range=rng,
            channels=chans,
            column_map=cols,
        )
    return segments


def segment_of_azimuth(theta: float) -> SegmentLabel:
    """Directional label owning an azimuth; boundaries belong to the
    half-open interval starting there."""
    theta = (theta + 180.0) % 360.0 - 180.0
    for label, (lo, hi) in _AZIMUTH_RANGES.items():
        if lo <= theta < hi:
            return label
    return SegmentLabel.BACK


def to_panorama_coords(
    label: SegmentLabel, p: PixelCoord, intr: SensorIntrinsics
) -> PixelCoord:
    """Map a segment-local pixel back to panorama coordinates.

    Exact inverse of the split's column_map; raises :class:`OutOfBounds`
    for pixels outside the segment.
    """
    seg_w = intr.width // 4
    if not (0 <= p.u < seg_w and 0 <= p.v < intr.height):
        raise OutOfBounds(
            f"pixel ({p.u}, {p.v}) outside segment bounds {seg_w}x{intr.height}"
        )
    return PixelCoord((segment_start(label, intr) + p.u) % intr.width, p.v)


# ---------------------------------------------------------------------------
# Rendering for backend dispatch and PNG export
# ---------------------------------------------------------------------------

# Channel preferred for captioning/detection, most informative first; the
# range channel is the fallback for geometry-only clouds.
DISPATCH_PRIORITY = ("ambient", "signal", "reflectivity")


def dispatch_channel(seg: Segment) -> tuple[str, np.ndarray]:
    for name in DISPATCH_PRIORITY:
        if name in seg.channels:
            return name, seg.channels[name]
    return "range", seg.range


def render_view(image: np.ndarray) -> np.ndarray:
    """Deterministic 8-bit rendering of a raster (min-max stretched)."""
    img = image.astype(np.float64)
    lo, hi = float(img.min()), float(img.max())
    if hi <= lo:
        return np.zeros(img.shape, dtype=np.uint8)
    return np.round((img - lo) / (hi - lo) * 255.0).astype(np.uint8)


def segment_png_bytes(seg: Segment) -> bytes:
    """Viewable PNG of the segment's dispatch channel, byte-deterministic."""
    _, image = dispatch_channel(seg)
    buf = io.BytesIO()
    Image.fromarray(render_view(image)).save(buf, format="PNG")
    return buf.getvalue()


def write_segment_pngs(
    segments: dict[SegmentLabel, Segment], out_dir: str | Path, stem: str
) -> dict[SegmentLabel, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = {}
    for label in SEGMENT_ORDER:
        path = out_dir / f"{stem}_{label.value}.png"
        path.write_bytes(segment_png_bytes(segments[label]))
        written[label] = path
    return written
