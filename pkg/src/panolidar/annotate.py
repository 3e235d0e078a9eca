"""Drawing localized objects back onto panorama imagery.

Boxes are drawn in panorama coordinates, so a Back box spanning the ±180
seam renders as two strips, one at each edge of the image. Rendering is
pure array manipulation (plus PIL's built-in bitmap font for labels) and
therefore deterministic; with no objects the input pixels pass through
unchanged.
"""

from __future__ import annotations

import numpy as np
from PIL import Image, ImageDraw, ImageFont

from .errors import DimensionMismatch
from .fusion import format_annotation
from .segmentation import SegmentLabel, segment_start
from .projection import SensorIntrinsics


def _column_runs(cols: np.ndarray) -> list[np.ndarray]:
    """Split a column sequence into contiguous runs (at most two)."""
    if len(cols) == 0:
        return []
    breaks = np.nonzero(np.diff(cols) != 1)[0] + 1
    return np.split(cols, breaks)


def _text_mask(text: str) -> np.ndarray:
    font = ImageFont.load_default()
    left, top, right, bottom = font.getbbox(text)
    img = Image.new("L", (max(right, 1), max(bottom, 1)), 0)
    ImageDraw.Draw(img).text((0, 0), text, fill=255, font=font)
    return np.asarray(img) > 0


def _stamp(canvas: np.ndarray, mask: np.ndarray, row: int, col: int, value) -> None:
    h, w = canvas.shape
    mh, mw = mask.shape
    r0, c0 = max(row, 0), max(col, 0)
    r1, c1 = min(row + mh, h), min(col + mw, w)
    if r0 >= r1 or c0 >= c1:
        return
    sub = mask[r0 - row : r1 - row, c0 - col : c1 - col]
    region = canvas[r0:r1, c0:c1]
    region[sub] = value


def annotate_panorama(image: np.ndarray, scene: dict) -> np.ndarray:
    """Overlay every localized object of a scene dict onto a panorama.

    ``image`` is a 2-D grayscale array (uint8 or uint16); the overlay is
    drawn at the dtype's maximum value. Raises
    :class:`DimensionMismatch` when the scene's boxes do not fit the
    panorama's segment geometry.
    """
    if image.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D grayscale panorama, got shape {image.shape}")
    h, w = image.shape
    if w % 8 != 0:
        raise DimensionMismatch(f"panorama width {w} not divisible by 8")
    seg_w = w // 4
    # Column math below only depends on the raster size.
    intr = SensorIntrinsics(width=w, height=max(h, 1))

    canvas = image.copy()
    ink = np.iinfo(canvas.dtype).max if canvas.dtype.kind == "u" else canvas.max() or 1

    for key in ("left", "front", "right", "back"):
        seg = scene.get("segments", {}).get(key, {})
        label = SegmentLabel(key)
        start = segment_start(label, intr)
        for obj in seg.get("objects", []):
            u0, v0, u1, v1 = obj["bbox_segment"]
            if not (0 <= u0 < u1 <= seg_w and 0 <= v0 < v1 <= h):
                raise DimensionMismatch(
                    f"{key}: bbox {obj['bbox_segment']} outside segment {seg_w}x{h}"
                )
            cols = (start + np.arange(u0, u1, dtype=np.int64)) % w
            runs = _column_runs(cols)
            for run in runs:
                c0, c1 = int(run[0]), int(run[-1]) + 1
                canvas[v0, c0:c1] = ink
                canvas[v1 - 1, c0:c1] = ink
                canvas[v0:v1, c0] = ink
                canvas[v0:v1, c1 - 1] = ink
            text = f"{obj['label']} {format_annotation(obj['range_m'], obj['azimuth_deg'])}"
            widest = max(runs, key=len)
            _stamp(canvas, _text_mask(text), v0 + 2, int(widest[0]) + 2, ink)
    return canvas
