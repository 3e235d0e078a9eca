"""Sidecar entry points: serve the protocol, or test an endpoint."""

from __future__ import annotations

import sys
from pathlib import Path

import click
import uvicorn

from .app import create_app
from .config import DEFAULT_MAX_IMAGE_BYTES, SidecarConfig, read_config_file
from .contract import contract_suite, format_report


@click.group()
def main() -> None:
    """Reference inference service for the panolidar wire protocol."""


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="TOML or INI file with a [sidecar] section.")
@click.option("--mode", type=click.Choice(["canned", "model"]), default=None)
@click.option("--fixture", type=click.Path(path_type=Path), default=None,
              help="Canned-mode fixture JSON keyed by image SHA-256.")
@click.option("--model-id", default=None, help="Model identifier for model mode.")
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
@click.option("--max-image-bytes", type=int, default=None)
@click.option("--score-threshold", type=float, default=None,
              help="Drop model detections scoring below this (default 0: keep all).")
def serve(config_path, mode, fixture, model_id, host, port, max_image_bytes,
          score_threshold) -> None:
    """Run the HTTP service until interrupted."""
    settings = read_config_file(config_path) if config_path else {}
    merged = {
        "mode": mode or settings.get("mode"),
        "fixture_path": fixture or settings.get("fixture_path"),
        "model_id": model_id or settings.get("model_id"),
        "host": host or settings.get("host", "127.0.0.1"),
        "port": port if port is not None else settings.get("port", 8081),
        "max_image_bytes": max_image_bytes
        if max_image_bytes is not None
        else settings.get("max_image_bytes", DEFAULT_MAX_IMAGE_BYTES),
        "score_threshold": score_threshold
        if score_threshold is not None
        else settings.get("score_threshold", 0.0),
    }
    if merged["mode"] is None:
        click.echo("error: --mode (or a config file) is required", err=True)
        sys.exit(2)
    if merged["fixture_path"] is not None:
        merged["fixture_path"] = Path(merged["fixture_path"])
    try:
        config = SidecarConfig(**merged)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


@main.command("contract")
@click.argument("endpoint")
@click.option("--timeout", type=float, default=10.0, show_default=True)
@click.option("--max-image-bytes", type=int, default=DEFAULT_MAX_IMAGE_BYTES,
              show_default=True, help="Server limit probed by the oversize case.")
def contract(endpoint: str, timeout: float, max_image_bytes: int) -> None:
    """Run the protocol contract suite against ENDPOINT."""
    cases = contract_suite(endpoint, timeout=timeout, max_image_bytes=max_image_bytes)
    click.echo(format_report(cases))
    sys.exit(0 if all(c.passed for c in cases) else 1)


if __name__ == "__main__":
    main()
