"""Range and azimuth for detected objects, read off the panorama.

The azimuth comes from pure geometry (the panorama column of the box
center), so it is always available. The range is the panorama range value
at the box center; when that pixel holds the no-return sentinel, the
nearest positive value inside the box wins instead (expanding Chebyshev
rings around the center), and ``range_source`` records which path
produced the number so the fallback stays auditable.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .backend import SegmentAnalysis
from .projection import PanoramaImage, PixelCoord, azimuth_of_column
from .segmentation import SegmentLabel, to_panorama_coords


class RangeSource(enum.Enum):
    CENTER_PIXEL = "center_pixel"
    NEAREST_VALID_IN_BBOX = "nearest_valid_in_bbox"
    UNAVAILABLE = "unavailable"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LocalizedObject:
    """A detection enriched with position relative to the sensor.

    The box stays in segment coordinates (a Back box may wrap the seam in
    panorama space); ``center_pano`` is the box center mapped to panorama
    coordinates. ``range_m`` is None when the box contains no return.
    """

    label: str
    segment: SegmentLabel
    bbox_segment: tuple[int, int, int, int]
    center_pano: PixelCoord
    azimuth_deg: float
    range_m: float | None
    range_source: RangeSource
    score: float | None = None


def bbox_center(bbox: tuple[int, int, int, int]) -> PixelCoord:
    """Integer midpoint of a half-open box (floor on odd spans)."""
    u0, v0, u1, v1 = bbox
    return PixelCoord((u0 + u1) // 2, (v0 + v1) // 2)


def object_azimuth(center: PixelCoord, pano: PanoramaImage) -> float:
    """Azimuth of a panorama pixel, degrees in [-180, 180)."""
    return azimuth_of_column(center.u, pano.intrinsics)


def object_range(
    center: PixelCoord,
    bbox: tuple[int, int, int, int],
    label: SegmentLabel,
    pano: PanoramaImage,
) -> tuple[float | None, RangeSource]:
    """Range for a box, all coordinates in segment space.

    Center pixel first; otherwise the smallest Chebyshev ring around the
    center (clipped to the box) that holds any positive range, taking that
    ring's minimum. Returns (None, UNAVAILABLE) for an all-sentinel box.
    """
    u0, v0, u1, v1 = bbox
    intr = pano.intrinsics
    pano_cols = np.array(
        [to_panorama_coords(label, PixelCoord(u, 0), intr).u for u in range(u0, u1)],
        dtype=np.int64,
    )
    window = pano.range[v0:v1, :][:, pano_cols]

    cu, cv = center.u - u0, center.v - v0
    if window[cv, cu] > 0.0:
        return float(window[cv, cu]), RangeSource.CENTER_PIXEL

    positive = window > 0.0
    if not positive.any():
        return None, RangeSource.UNAVAILABLE

    vs, us = np.nonzero(positive)
    cheb = np.maximum(np.abs(us - cu), np.abs(vs - cv))
    ring = cheb.min()
    on_ring = cheb == ring
    value = float(window[vs[on_ring], us[on_ring]].min())
    return value, RangeSource.NEAREST_VALID_IN_BBOX


def localize(analysis: SegmentAnalysis, pano: PanoramaImage) -> list[LocalizedObject]:
    """One LocalizedObject per detection, in detection order."""
    objects = []
    for det in analysis.detections:
        center_seg = bbox_center(det.bbox)
        center_pano = to_panorama_coords(analysis.label, center_seg, pano.intrinsics)
        rng, source = object_range(center_seg, det.bbox, analysis.label, pano)
        objects.append(
            LocalizedObject(
                label=det.label,
                segment=analysis.label,
                bbox_segment=det.bbox,
                center_pano=center_pano,
                azimuth_deg=object_azimuth(center_pano, pano),
                range_m=rng,
                range_source=source,
                score=det.score,
            )
        )
    return objects
