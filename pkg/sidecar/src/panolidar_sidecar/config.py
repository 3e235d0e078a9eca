"""Sidecar configuration: flags plus an optional TOML or INI file."""

from __future__ import annotations

import configparser
import sys
from dataclasses import dataclass
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_MAX_IMAGE_BYTES = 8 * 1024 * 1024


@dataclass(frozen=True)
class SidecarConfig:
    """Service settings; ``mode`` picks the canned or model implementation.

    Canned mode requires ``fixture_path``; model mode requires
    ``model_id``. ``score_threshold`` filters model detections (0.0
    reports everything).
    """

    mode: str
    model_id: str | None = None
    fixture_path: Path | None = None
    host: str = "127.0.0.1"
    port: int = 8081
    max_image_bytes: int = DEFAULT_MAX_IMAGE_BYTES
    score_threshold: float = 0.0

    def __post_init__(self) -> None:
        if self.mode not in ("canned", "model"):
            raise ValueError(f"mode must be 'canned' or 'model', got {self.mode!r}")
        if self.mode == "canned" and self.fixture_path is None:
            raise ValueError("canned mode requires a fixture path")
        if self.mode == "model" and not self.model_id:
            raise ValueError("model mode requires a model identifier")
        if self.max_image_bytes <= 0:
            raise ValueError("max_image_bytes must be positive")


def read_config_file(path: str | Path) -> dict:
    """Read sidecar settings from a ``.toml`` or ``.ini`` file."""
    path = Path(path)
    if path.suffix.lower() == ".toml":
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
        section = data.get("sidecar", data)
    else:
        parser = configparser.ConfigParser()
        parser.read(path)
        section = dict(parser["sidecar"]) if parser.has_section("sidecar") else {}
    out: dict = {}
    for key in ("mode", "model_id", "fixture_path", "host"):
        if key in section:
            out[key] = str(section[key])
    for key in ("port", "max_image_bytes"):
        if key in section:
            out[key] = int(section[key])
    if "score_threshold" in section:
        out["score_threshold"] = float(section["score_threshold"])
    return out
