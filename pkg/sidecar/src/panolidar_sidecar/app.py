"""HTTP service implementing the caption/detect wire protocol.

Endpoints: POST /v1/caption, POST /v1/detect, GET /healthz. All error
responses carry ``{"error": "<message>"}``: 400 for malformed JSON, bad
base64 or an undecodable image, 413 when the decoded image exceeds the
configured byte limit, 503 while the model is still loading.
"""

from __future__ import annotations

import base64
import binascii
import io
import json

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from PIL import Image
from starlette.concurrency import run_in_threadpool

from .canned import CannedStore
from .config import SidecarConfig


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


class _BadRequest(Exception):
    def __init__(self, status: int, message: str):
        self.status = status
        self.message = message


async def _read_image_request(request: Request, max_image_bytes: int) -> tuple[bytes, dict]:
    body = await request.body()
    try:
        payload = json.loads(body)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise _BadRequest(400, f"malformed JSON body: {exc}") from exc
    if not isinstance(payload, dict):
        raise _BadRequest(400, "request body must be a JSON object")
    encoded = payload.get("image_png_b64")
    if not isinstance(encoded, str):
        raise _BadRequest(400, "missing 'image_png_b64' string")
    try:
        image_bytes = base64.b64decode(encoded, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise _BadRequest(400, f"invalid base64 image: {exc}") from exc
    if len(image_bytes) > max_image_bytes:
        raise _BadRequest(
            413, f"image is {len(image_bytes)} bytes, limit {max_image_bytes}"
        )
    try:
        with Image.open(io.BytesIO(image_bytes)) as probe:
            probe.verify()
    except Exception as exc:
        raise _BadRequest(400, f"undecodable image: {exc}") from exc
    return image_bytes, payload


def create_app(config: SidecarConfig, runner=None) -> FastAPI:
    """Build the service; ``runner`` lets tests inject a model stand-in."""
    app = FastAPI(title="panolidar-sidecar", docs_url=None, redoc_url=None)
    store = CannedStore(config.fixture_path) if config.mode == "canned" else None
    if config.mode == "model" and runner is None:
        from .model import ModelRunner

        runner = ModelRunner(config.model_id, config.score_threshold)
        runner.start()
    app.state.runner = runner

    def model_unavailable() -> JSONResponse | None:
        if config.mode != "model":
            return None
        if runner.ready:
            return None
        detail = getattr(runner, "load_error", None)
        return _error(503, detail or "model is loading")

    @app.get("/healthz")
    async def healthz():
        return {"status": "ok"}

    @app.post("/v1/caption")
    async def caption(request: Request):
        unavailable = model_unavailable()
        if unavailable is not None:
            return unavailable
        try:
            image_bytes, _ = await _read_image_request(request, config.max_image_bytes)
        except _BadRequest as exc:
            return _error(exc.status, exc.message)
        if store is not None:
            return {"caption": store.lookup(image_bytes)["caption"]}
        image = Image.open(io.BytesIO(image_bytes)).convert("RGB")
        text = await run_in_threadpool(runner.caption, image)
        return {"caption": text}

    @app.post("/v1/detect")
    async def detect(request: Request):
        unavailable = model_unavailable()
        if unavailable is not None:
            return unavailable
        try:
            image_bytes, payload = await _read_image_request(request, config.max_image_bytes)
        except _BadRequest as exc:
            return _error(exc.status, exc.message)
        prompt = payload.get("prompt")
        if prompt is not None and not isinstance(prompt, str):
            return _error(400, "'prompt' must be a string when present")
        if store is not None:
            return {"detections": store.lookup(image_bytes)["detections"]}
        image = Image.open(io.BytesIO(image_bytes)).convert("RGB")
        detections = await run_in_threadpool(runner.detect, image, prompt)
        return {"detections": detections}

    return app
