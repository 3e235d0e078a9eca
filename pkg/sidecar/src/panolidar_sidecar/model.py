"""Vision-language model adapter for model mode.

Loads the configured captioning/detection model (Florence-2 family via
transformers) in a background thread; requests arriving before the load
finishes get a 503 from the HTTP layer. Inference is serialized behind a
lock so concurrent HTTP requests queue instead of fighting for the model.
"""

from __future__ import annotations

import threading

CAPTION_TASK = "<CAPTION>"
DETECT_TASK = "<OD>"
OPEN_VOCAB_TASK = "<OPEN_VOCABULARY_DETECTION>"


class ModelRunner:
    def __init__(self, model_id: str, score_threshold: float = 0.0):
        self.model_id = model_id
        self.score_threshold = score_threshold
        self._lock = threading.Lock()
        self._ready = threading.Event()
        self._error: str | None = None
        self._model = None
        self._processor = None

    def start(self) -> None:
        threading.Thread(target=self._load, daemon=True).start()

    @property
    def ready(self) -> bool:
        return self._ready.is_set()

    @property
    def load_error(self) -> str | None:
        return self._error

    def _load(self) -> None:
        try:
            import torch  # noqa: F401
            from transformers import AutoModelForCausalLM, AutoProcessor

            self._processor = AutoProcessor.from_pretrained(
                self.model_id, trust_remote_code=True
            )
            self._model = AutoModelForCausalLM.from_pretrained(
                self.model_id, trust_remote_code=True
            )
            self._model.eval()
            self._ready.set()
        except Exception as exc:  # load failures surface as 503 detail
            self._error = f"{type(exc).__name__}: {exc}"

    def _run_task(self, image, task: str, text_input: str | None = None) -> dict:
        import torch

        prompt = task if text_input is None else task + text_input
        with self._lock, torch.no_grad():
            inputs = self._processor(text=prompt, images=image, return_tensors="pt")
            generated = self._model.generate(
                input_ids=inputs["input_ids"],
                pixel_values=inputs["pixel_values"],
                max_new_tokens=512,
                num_beams=3,
                do_sample=False,
            )
            decoded = self._processor.batch_decode(generated, skip_special_tokens=False)[0]
            return self._processor.post_process_generation(
                decoded, task=task, image_size=(image.width, image.height)
            )

    def caption(self, image) -> str:
        result = self._run_task(image, CAPTION_TASK)
        return str(result.get(CAPTION_TASK, "")).strip()

    def detect(self, image, prompt: str | None = None) -> list[dict]:
        task = OPEN_VOCAB_TASK if prompt else DETECT_TASK
        result = self._run_task(image, task, text_input=prompt)
        payload = result.get(task, {})
        boxes = payload.get("bboxes", [])
        labels = payload.get("labels") or payload.get("bboxes_labels") or []
        scores = payload.get("scores") or [None] * len(boxes)
        detections = []
        for bbox, label, score in zip(boxes, labels, scores):
            det = _clamp_detection(bbox, str(label), score, image.width, image.height)
            if det is None:
                continue
            if score is not None and float(score) < self.score_threshold:
                continue
            detections.append(det)
        return detections


def _clamp_detection(
    bbox, label: str, score, width: int, height: int
) -> dict | None:
    """Force a raw model box into image bounds; drop it when degenerate."""
    if not label or len(bbox) != 4:
        return None
    u0 = max(0, min(int(round(bbox[0])), width))
    v0 = max(0, min(int(round(bbox[1])), height))
    u1 = max(0, min(int(round(bbox[2])), width))
    v1 = max(0, min(int(round(bbox[3])), height))
    if u0 >= u1 or v0 >= v1:
        return None
    out: dict = {"label": label, "bbox": [u0, v0, u1, v1]}
    out["score"] = None if score is None else max(0.0, min(float(score), 1.0))
    return out
