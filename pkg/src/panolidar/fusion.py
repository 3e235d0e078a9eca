"""Merging the four directional analyses into one scene description.

The merged text is a fixed-order concatenation (Left, Front, Right, Back)
of directional clauses. Each clause is a verbatim prefix followed by the
segment caption with its first letter lower-cased; every localized object
is annotated inline as "(R[m], A°)" right after the first caption word
matching its label, or listed in a trailing "Also detected:" clause when
the caption never mentions it. The whole merge is a pure function, so
identical inputs produce byte-identical text and JSON.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .backend import SegmentAnalysis
from .localization import LocalizedObject, bbox_center
from .segmentation import SEGMENT_ORDER, SegmentLabel

PREFIXES = {
    SegmentLabel.LEFT: "Looking towards the left, ",
    SegmentLabel.FRONT: "From the front perspective, ",
    SegmentLabel.RIGHT: "As seen from the right, ",
    SegmentLabel.BACK: "From the back viewpoint, ",
}

NO_DESCRIPTION = "no description available"


@dataclass
class SegmentScene:
    caption: str
    objects: list[LocalizedObject] = field(default_factory=list)


@dataclass
class SceneDescription:
    frame_id: str
    per_segment: dict[SegmentLabel, SegmentScene]
    merged_text: str
    warnings: list[str] = field(default_factory=list)


def format_number(value: float) -> str:
    """Two decimals at most, trailing zeros trimmed: 11.0 -> "11"."""
    text = f"{value:.2f}".rstrip("0").rstrip(".")
    return "0" if text in ("-0", "") else text


def format_annotation(range_m: float | None, azimuth_deg: float) -> str:
    azimuth = format_number(azimuth_deg)
    if range_m is None:
        return f"(–, {azimuth}°)"
    return f"({format_number(range_m)}[m], {azimuth}°)"


def merge_scene(
    analyses: dict[SegmentLabel, SegmentAnalysis],
    objects: dict[SegmentLabel, list[LocalizedObject]],
    frame_id: str = "",
) -> SceneDescription:
    """Fuse per-segment captions and localized objects into one scene.

    Requires exactly one analysis per segment (failed or empty analyses
    included); raises ValueError otherwise. Every object ends up either
    annotated inline or in its segment's "Also detected:" appendix.
    """
    missing = [label.value for label in SEGMENT_ORDER if label not in analyses]
    if missing or len(analyses) != 4:
        raise ValueError(f"need exactly one analysis per segment; missing {missing}")

    clauses: list[str] = []
    warnings: list[str] = []
    per_segment: dict[SegmentLabel, SegmentScene] = {}

    for label in SEGMENT_ORDER:
        analysis = analyses[label]
        segment_objects = list(objects.get(label, []))
        per_segment[label] = SegmentScene(caption=analysis.caption, objects=segment_objects)
        warnings.extend(analysis.warnings)

        if analysis.error is not None or analysis.caption == "":
            if not analysis.warnings and analysis.error is None:
                warnings.append(f"{label.value}: {NO_DESCRIPTION}")
            body, unmatched = NO_DESCRIPTION, segment_objects
        else:
            body, unmatched = _annotate_caption(_lower_first(analysis.caption), segment_objects)

        clause = PREFIXES[label] + body
        if unmatched:
            entries = ", ".join(
                f"{o.label} {format_annotation(o.range_m, o.azimuth_deg)}" for o in unmatched
            )
            clause += f" Also detected: {entries}"
        clauses.append(clause)

    return SceneDescription(
        frame_id=frame_id,
        per_segment=per_segment,
        merged_text=" ".join(clauses),
        warnings=warnings,
    )


def _lower_first(text: str) -> str:
    return text[0].lower() + text[1:] if text else text


def _label_pattern(label: str) -> re.Pattern:
    """Whole-word match for the label, its bare singular or naive plural."""
    base = label.strip()
    variants = {base}
    if base.lower().endswith("s") and len(base) > 1:
        variants.add(base[:-1])
    else:
        variants.add(base + "s")
    ordered = sorted(variants, key=len, reverse=True)
    return re.compile(
        r"\b(?:" + "|".join(re.escape(v) for v in ordered) + r")\b", re.IGNORECASE
    )


def _annotate_caption(
    caption: str, segment_objects: list[LocalizedObject]
) -> tuple[str, list[LocalizedObject]]:
    """Attach annotations to caption occurrences; return leftover objects.

    Objects claim occurrences of their label left-to-right by box center,
    successive duplicates taking successive occurrences.
    """
    ordered = sorted(
        range(len(segment_objects)),
        key=lambda i: bbox_center(segment_objects[i].bbox_segment).u,
    )
    claimed: dict[str, int] = {}
    insertions: list[tuple[int, int, str]] = []
    unmatched_idx: list[int] = []
    for rank, i in enumerate(ordered):
        obj = segment_objects[i]
        key = obj.label.lower()
        ends = [m.end() for m in _label_pattern(obj.label).finditer(caption)]
        k = claimed.get(key, 0)
        if k < len(ends):
            claimed[key] = k + 1
            insertions.append(
                (ends[k], rank, " " + format_annotation(obj.range_m, obj.azimuth_deg))
            )
        else:
            unmatched_idx.append(i)

    text = caption
    for pos, _, annotation in sorted(insertions, reverse=True):
        text = text[:pos] + annotation + text[pos:]
    # Preserve original detection order in the appendix.
    unmatched = [segment_objects[i] for i in sorted(unmatched_idx)]
    return text, unmatched


# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------

SCENE_SCHEMA: dict = {
    "type": "object",
    "required": ["frame_id", "segments", "merged_text", "warnings"],
    "additionalProperties": False,
    "properties": {
        "frame_id": {"type": "string"},
        "merged_text": {"type": "string"},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "segments": {
            "type": "object",
            "required": ["left", "front", "right", "back"],
            "additionalProperties": False,
            "properties": {
                key: {
                    "type": "object",
                    "required": ["caption", "objects"],
                    "additionalProperties": False,
                    "properties": {
                        "caption": {"type": "string"},
                        "objects": {
                            "type": "array",
                            "items": {
                                "type": "object",
                                "required": [
                                    "label",
                                    "range_m",
                                    "azimuth_deg",
                                    "bbox_segment",
                                    "range_source",
                                    "score",
                                ],
                                "additionalProperties": False,
                                "properties": {
                                    "label": {"type": "string", "minLength": 1},
                                    "range_m": {"type": ["number", "null"]},
                                    "azimuth_deg": {"type": "number"},
                                    "bbox_segment": {
                                        "type": "array",
                                        "items": {"type": "integer"},
                                        "minItems": 4,
                                        "maxItems": 4,
                                    },
                                    "range_source": {
                                        "enum": [
                                            "center_pixel",
                                            "nearest_valid_in_bbox",
                                            "unavailable",
                                        ]
                                    },
                                    "score": {
                                        "type": ["number", "null"],
                                        "minimum": 0,
                                        "maximum": 1,
                                    },
                                },
                            },
                        },
                    },
                }
                for key in ("left", "front", "right", "back")
            },
        },
    },
}


def scene_to_dict(scene: SceneDescription) -> dict:
    segments = {}
    for label in SEGMENT_ORDER:
        seg = scene.per_segment[label]
        segments[label.value] = {
            "caption": seg.caption,
            "objects": [
                {
                    "label": o.label,
                    "range_m": o.range_m,
                    "azimuth_deg": o.azimuth_deg,
                    "bbox_segment": list(o.bbox_segment),
                    "range_source": o.range_source.value,
                    "score": o.score,
                }
                for o in seg.objects
            ],
        }
    return {
        "frame_id": scene.frame_id,
        "segments": segments,
        "merged_text": scene.merged_text,
        "warnings": list(scene.warnings),
    }


def render_scene_json(scene: SceneDescription) -> str:
    """Canonical JSON: sorted keys, stable float repr, trailing newline.

    Identical scenes render to byte-identical text, which golden-file
    tests rely on.
    """
    return json.dumps(scene_to_dict(scene), sort_keys=True, indent=2, ensure_ascii=False) + "\n"
