"""Pluggable vision backend: per-segment captioning and object detection.

Two implementations share one duck-typed interface:

* :class:`MockBackend` answers from a JSON fixture keyed by segment label,
  making whole-pipeline runs deterministic without any model.
* :class:`RemoteBackend` speaks the HTTP/1.1 + JSON wire protocol
  (POST /v1/caption and /v1/detect with a base64 PNG body) to an
  inference sidecar.

Both raise :class:`BackendUnavailable` / :class:`ProtocolError` carrying
the segment label so a partially failed scene can still be reported.
"""

from __future__ import annotations

import base64
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol

import httpx

from .errors import BackendUnavailable, FixtureParseError, ProtocolError
from .segmentation import SEGMENT_ORDER, Segment, SegmentLabel, segment_png_bytes

DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class Detection:
    """A labeled box in segment pixel coordinates, half-open."""

    label: str
    bbox: tuple[int, int, int, int]
    score: float | None = None


@dataclass
class SegmentAnalysis:
    """Caption and detections for one segment, plus bookkeeping.

    ``error`` is set when the backend failed for this segment; the segment
    still occupies its slot in the scene so nothing is silently dropped.
    """

    label: SegmentLabel
    caption: str = ""
    detections: list[Detection] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    error: str | None = None


class Backend(Protocol):
    def caption(self, label: SegmentLabel, image_png: bytes) -> str: ...

    def detect(
        self, label: SegmentLabel, image_png: bytes, prompt: str | None = None
    ) -> list[Detection]: ...


# ---------------------------------------------------------------------------
# Mock backend
# ---------------------------------------------------------------------------


class MockBackend:
    """Deterministic fixture-driven backend.

    The fixture is a JSON map from segment label ("left", "front",
    "right", "back") to ``{"caption": str, "detections": [...]}`` using
    the wire-protocol detection schema. Labels missing from the fixture
    yield empty results rather than errors.
    """

    def __init__(self, fixture_path: str | Path):
        path = Path(fixture_path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise FixtureParseError(f"cannot read fixture {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise FixtureParseError(f"fixture {path} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise FixtureParseError(f"fixture {path} must be a JSON object at top level")
        self._entries: dict[str, tuple[str, list[Detection]]] = {}
        for key, entry in data.items():
            if key not in {s.value for s in SegmentLabel}:
                continue
            if not isinstance(entry, dict):
                raise FixtureParseError(f"fixture entry {key!r} must be an object")
            caption = entry.get("caption", "")
            if not isinstance(caption, str):
                raise FixtureParseError(f"fixture entry {key!r}: caption must be a string")
            try:
                detections = [_detection_from_json(d) for d in entry.get("detections", [])]
            except ProtocolError as exc:
                raise FixtureParseError(f"fixture entry {key!r}: {exc}") from exc
            self._entries[key] = (caption, detections)

    def caption(self, label: SegmentLabel, image_png: bytes) -> str:
        entry = self._entries.get(label.value)
        return entry[0] if entry else ""

    def detect(
        self, label: SegmentLabel, image_png: bytes, prompt: str | None = None
    ) -> list[Detection]:
        entry = self._entries.get(label.value)
        return list(entry[1]) if entry else []


def mock_backend(fixture_path: str | Path) -> MockBackend:
    return MockBackend(fixture_path)


# ---------------------------------------------------------------------------
# Remote backend (wire protocol client)
# ---------------------------------------------------------------------------


class RemoteBackend:
    """HTTP client for the caption/detect wire protocol.

    One retry on transient failures (connect errors, timeouts, 5xx);
    definitive protocol violations (4xx, malformed JSON) are not retried.
    The underlying client is thread-safe, so the four segments may be
    requested concurrently.
    """

    def __init__(self, endpoint: str, timeout: float = DEFAULT_TIMEOUT, retries: int = 1):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self._client = httpx.Client(timeout=timeout)

    def close(self) -> None:
        self._client.close()

    def caption(self, label: SegmentLabel, image_png: bytes) -> str:
        body = {"image_png_b64": base64.b64encode(image_png).decode("ascii")}
        data = self._post("/v1/caption", body, label)
        caption = data.get("caption")
        if not isinstance(caption, str):
            raise ProtocolError("caption response missing 'caption' string", label.value)
        return caption

    def detect(
        self, label: SegmentLabel, image_png: bytes, prompt: str | None = None
    ) -> list[Detection]:
        body: dict = {"image_png_b64": base64.b64encode(image_png).decode("ascii")}
        if prompt is not None:
            body["prompt"] = prompt
        data = self._post("/v1/detect", body, label)
        raw = data.get("detections")
        if not isinstance(raw, list):
            raise ProtocolError("detect response missing 'detections' list", label.value)
        try:
            return [_detection_from_json(d) for d in raw]
        except ProtocolError as exc:
            raise ProtocolError(str(exc), label.value) from exc

    def _post(self, path: str, body: dict, label: SegmentLabel) -> dict:
        url = self.endpoint + path
        last_exc: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                resp = self._client.post(url, json=body)
            except (httpx.ConnectError, httpx.TimeoutException, httpx.NetworkError) as exc:
                last_exc = exc
                continue
            if resp.status_code >= 500:
                last_exc = BackendUnavailable(
                    f"{url} answered {resp.status_code}: {_error_text(resp)}", label.value
                )
                continue
            if resp.status_code >= 400:
                raise ProtocolError(
                    f"{url} answered {resp.status_code}: {_error_text(resp)}", label.value
                )
            try:
                data = resp.json()
            except ValueError as exc:
                raise ProtocolError(f"{url} returned non-JSON body", label.value) from exc
            if not isinstance(data, dict):
                raise ProtocolError(f"{url} returned non-object JSON", label.value)
            return data
        if isinstance(last_exc, BackendUnavailable):
            raise last_exc
        raise BackendUnavailable(f"{url} unreachable: {last_exc}", label.value)


def _error_text(resp: httpx.Response) -> str:
    try:
        data = resp.json()
        if isinstance(data, dict) and isinstance(data.get("error"), str):
            return data["error"]
    except ValueError:
        pass
    return resp.text[:200]


def _detection_from_json(d: object) -> Detection:
    if not isinstance(d, dict):
        raise ProtocolError("detection entry is not an object")
    label = d.get("label")
    if not isinstance(label, str) or not label:
        raise ProtocolError("detection label must be a non-empty string")
    bbox = d.get("bbox")
    if (
        not isinstance(bbox, (list, tuple))
        or len(bbox) != 4
        or not all(isinstance(v, (int, float)) for v in bbox)
    ):
        raise ProtocolError(f"detection bbox must be 4 numbers, got {bbox!r}")
    score = d.get("score")
    if score is not None:
        if not isinstance(score, (int, float)) or not 0.0 <= score <= 1.0:
            raise ProtocolError(f"detection score outside [0, 1]: {score!r}")
        score = float(score)
    coords = tuple(int(round(v)) for v in bbox)
    return Detection(label=label, bbox=coords, score=score)


# ---------------------------------------------------------------------------
# Per-segment analysis
# ---------------------------------------------------------------------------


def analyze_segment(
    seg: Segment, backend: Backend, prompt: str | None = None
) -> SegmentAnalysis:
    """Caption and detect on one segment, validating the detections.

    Boxes partly outside the segment are clipped, fully-outside or
    degenerate boxes dropped; both leave a warning so noisy model output
    stays observable. Backend failures propagate as exceptions tagged
    with the segment label.
    """
    png = segment_png_bytes(seg)
    analysis = SegmentAnalysis(label=seg.label)
    analysis.caption = backend.caption(seg.label, png)
    if analysis.caption == "":
        analysis.warnings.append(f"{seg.label.value}: backend returned an empty caption")

    for det in backend.detect(seg.label, png, prompt):
        clipped = _clip_bbox(det.bbox, seg.width, seg.height)
        if clipped is None:
            analysis.warnings.append(
                f"{seg.label.value}: dropped detection {det.label!r} fully outside "
                f"segment bounds {det.bbox}"
            )
            continue
        if clipped != det.bbox:
            analysis.warnings.append(
                f"{seg.label.value}: clipped detection {det.label!r} {det.bbox} -> {clipped}"
            )
        analysis.detections.append(Detection(label=det.label, bbox=clipped, score=det.score))
    return analysis


def analyze_segments(
    segments: dict[SegmentLabel, Segment],
    backend: Backend,
    prompt: str | None = None,
    max_workers: int = 4,
) -> list[SegmentAnalysis]:
    """Analyze all segments concurrently (bounded fan-out).

    Always returns one analysis per submitted segment, in SEGMENT_ORDER;
    per-segment backend failures are recorded on the analysis instead of
    being raised.
    """
    ordered = [label for label in SEGMENT_ORDER if label in segments]

    def run(label: SegmentLabel) -> SegmentAnalysis:
        try:
            return analyze_segment(segments[label], backend, prompt)
        except (BackendUnavailable, ProtocolError) as exc:
            failed = SegmentAnalysis(label=label, error=f"{type(exc).__name__}: {exc}")
            failed.warnings.append(f"{label.value}: {type(exc).__name__}: {exc}")
            return failed

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(run, ordered))


def _clip_bbox(
    bbox: tuple[int, int, int, int], width: int, height: int
) -> tuple[int, int, int, int] | None:
    u0, v0, u1, v1 = bbox
    u0c, v0c = max(u0, 0), max(v0, 0)
    u1c, v1c = min(u1, width), min(v1, height)
    if u0c >= u1c or v0c >= v1c:
        return None
    return (u0c, v0c, u1c, v1c)
