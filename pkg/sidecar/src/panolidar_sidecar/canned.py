"""Canned responses: a JSON fixture keyed by image content hash.

The fixture maps the SHA-256 hex digest of the submitted PNG bytes to the
response to serve verbatim; a ``"*"`` entry, when present, answers any
unknown image. Unknown images without a default yield an empty caption
and no detections rather than an error, so contract tests can probe with
arbitrary images.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

EMPTY_ENTRY = {"caption": "", "detections": []}


def image_key(image_bytes: bytes) -> str:
    return hashlib.sha256(image_bytes).hexdigest()


def _validate_entry(key: str, entry: object) -> dict:
    if not isinstance(entry, dict):
        raise ValueError(f"canned entry {key!r} must be an object")
    caption = entry.get("caption", "")
    if not isinstance(caption, str):
        raise ValueError(f"canned entry {key!r}: caption must be a string")
    detections = entry.get("detections", [])
    if not isinstance(detections, list):
        raise ValueError(f"canned entry {key!r}: detections must be a list")
    for det in detections:
        if not isinstance(det, dict):
            raise ValueError(f"canned entry {key!r}: detection must be an object")
        if not isinstance(det.get("label"), str) or not det["label"]:
            raise ValueError(f"canned entry {key!r}: detection label missing")
        bbox = det.get("bbox")
        if not isinstance(bbox, list) or len(bbox) != 4:
            raise ValueError(f"canned entry {key!r}: bbox must be 4 numbers")
        score = det.get("score")
        if score is not None and not 0.0 <= float(score) <= 1.0:
            raise ValueError(f"canned entry {key!r}: score outside [0, 1]")
    return {"caption": caption, "detections": detections}


class CannedStore:
    def __init__(self, fixture_path: str | Path):
        raw = json.loads(Path(fixture_path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError("canned fixture must be a JSON object")
        self._entries = {key: _validate_entry(key, entry) for key, entry in raw.items()}

    def lookup(self, image_bytes: bytes) -> dict:
        entry = self._entries.get(image_key(image_bytes))
        if entry is None:
            entry = self._entries.get("*", EMPTY_ENTRY)
        return entry


def build_canned_fixture(
    images_by_key: dict[str, bytes], entries_by_key: dict[str, dict]
) -> dict:
    """Key fixture entries by image hash.

    ``images_by_key`` and ``entries_by_key`` share arbitrary keys (for
    example segment labels); each image's hash maps to its entry. Useful
    for replaying a mock-backend fixture through the wire protocol.
    """
    fixture = {}
    for key, image in images_by_key.items():
        if key in entries_by_key:
            fixture[image_key(image)] = entries_by_key[key]
    return fixture
