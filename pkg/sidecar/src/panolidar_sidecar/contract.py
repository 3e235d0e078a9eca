"""Wire-protocol contract suite, runnable against any endpoint.

Exercises every protocol case (happy paths, empty results, oversize
payload, malformed bodies, bad/undecodable images, health) and reports a
pass/fail entry per case instead of raising, so a closed endpoint simply
fails every case with its connection diagnostics.
"""

from __future__ import annotations

import base64
import io
from dataclasses import dataclass

import httpx
from PIL import Image

from .config import DEFAULT_MAX_IMAGE_BYTES


@dataclass
class ContractCase:
    name: str
    passed: bool
    detail: str = ""


def _png(width: int = 32, height: int = 24, shade: int = 128) -> bytes:
    buf = io.BytesIO()
    Image.new("L", (width, height), shade).save(buf, format="PNG")
    return buf.getvalue()


def _b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


def contract_suite(
    endpoint: str,
    timeout: float = 10.0,
    max_image_bytes: int = DEFAULT_MAX_IMAGE_BYTES,
) -> list[ContractCase]:
    endpoint = endpoint.rstrip("/")
    results: list[ContractCase] = []

    def check(name: str, fn) -> None:
        try:
            detail = fn()
            results.append(ContractCase(name, True, detail or ""))
        except AssertionError as exc:
            results.append(ContractCase(name, False, str(exc)))
        except httpx.HTTPError as exc:
            results.append(ContractCase(name, False, f"connection: {exc!r}"))

    with httpx.Client(timeout=timeout) as client:

        def post(path: str, payload) -> httpx.Response:
            return client.post(endpoint + path, json=payload)

        def expect_error(resp: httpx.Response, status: int) -> str:
            assert resp.status_code == status, f"expected {status}, got {resp.status_code}"
            data = resp.json()
            assert isinstance(data.get("error"), str) and data["error"], (
                f"error body malformed: {resp.text[:200]}"
            )
            return data["error"]

        def case_health() -> str:
            resp = client.get(endpoint + "/healthz")
            assert resp.status_code == 200, f"got {resp.status_code}"
            assert resp.json() == {"status": "ok"}, resp.text[:200]
            return ""

        def case_caption_happy() -> str:
            resp = post("/v1/caption", {"image_png_b64": _b64(_png())})
            assert resp.status_code == 200, f"got {resp.status_code}: {resp.text[:200]}"
            data = resp.json()
            assert isinstance(data.get("caption"), str), resp.text[:200]
            return ""

        def case_detect_happy_schema() -> str:
            image = _png()
            resp = post("/v1/detect", {"image_png_b64": _b64(image)})
            assert resp.status_code == 200, f"got {resp.status_code}: {resp.text[:200]}"
            data = resp.json()
            detections = data.get("detections")
            assert isinstance(detections, list), resp.text[:200]
            with Image.open(io.BytesIO(image)) as img:
                width, height = img.size
            for det in detections:
                assert isinstance(det.get("label"), str) and det["label"], det
                bbox = det.get("bbox")
                assert isinstance(bbox, list) and len(bbox) == 4, det
                u0, v0, u1, v1 = bbox
                assert 0 <= u0 < u1 <= width and 0 <= v0 < v1 <= height, det
                score = det.get("score")
                assert score is None or 0.0 <= score <= 1.0, det
            return f"{len(detections)} detections"

        def case_detect_prompt_passthrough() -> str:
            resp = post(
                "/v1/detect", {"image_png_b64": _b64(_png()), "prompt": "vehicles"}
            )
            assert resp.status_code == 200, f"got {resp.status_code}: {resp.text[:200]}"
            assert isinstance(resp.json().get("detections"), list)
            return ""

        def case_detect_unknown_image_empty() -> str:
            resp = post("/v1/detect", {"image_png_b64": _b64(_png(shade=7, width=31))})
            assert resp.status_code == 200, f"got {resp.status_code}"
            assert resp.json().get("detections") == [], resp.text[:200]
            return ""

        def case_malformed_body() -> str:
            resp = httpx.post(
                endpoint + "/v1/caption",
                content=b"{not json",
                headers={"Content-Type": "application/json"},
                timeout=timeout,
            )
            return expect_error(resp, 400)

        def case_bad_base64() -> str:
            return expect_error(post("/v1/caption", {"image_png_b64": "!!!"}), 400)

        def case_undecodable_image() -> str:
            return expect_error(
                post("/v1/caption", {"image_png_b64": _b64(b"this is not a png")}), 400
            )

        def case_missing_image_field() -> str:
            return expect_error(post("/v1/caption", {"nope": 1}), 400)

        def case_oversize_payload() -> str:
            blob = b"\x00" * (max_image_bytes + 1)
            return expect_error(post("/v1/caption", {"image_png_b64": _b64(blob)}), 413)

        check("healthz", case_health)
        check("caption happy path", case_caption_happy)
        check("detect happy path and schema", case_detect_happy_schema)
        check("detect prompt pass-through", case_detect_prompt_passthrough)
        check("detect unknown image yields empty list", case_detect_unknown_image_empty)
        check("malformed JSON body rejected 400", case_malformed_body)
        check("invalid base64 rejected 400", case_bad_base64)
        check("undecodable image rejected 400", case_undecodable_image)
        check("missing image field rejected 400", case_missing_image_field)
        check("oversize payload rejected 413", case_oversize_payload)

    return results


def format_report(cases: list[ContractCase]) -> str:
    lines = []
    for case in cases:
        status = "PASS" if case.passed else "FAIL"
        suffix = f" ({case.detail})" if case.detail else ""
        lines.append(f"{status}: {case.name}{suffix}")
    failed = sum(not c.passed for c in cases)
    lines.append(f"{len(cases) - failed}/{len(cases)} contract cases passed")
    return "\n".join(lines)
