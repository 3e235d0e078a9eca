"""Command-line pipeline: project, segment, analyze, annotate.

Configuration precedence is flags > environment (PANOLIDAR_*) > TOML
config file (--config) > built-in defaults. The pipeline itself is free
of randomness, so identical inputs and configuration produce
byte-identical artifacts.

Exit codes: 0 success, 2 configuration/parse errors, 3 I/O errors,
4 strict-mode backend unavailable, 5 strict-mode protocol error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
from PIL import Image

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import annotate as annotate_mod
from . import backend as backend_mod
from . import fusion, localization, pointcloud, projection, segmentation
from .errors import BadWidth, DimensionMismatch, FixtureParseError, FormatMismatch

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_BACKEND = 4
EXIT_PROTOCOL = 5

_EXTENSION_FORMATS = {".csv": "csv", ".pcd": "pcd_ascii", ".bin": "raw_f32", ".f32": "raw_f32"}
EMIT_CHOICES = ("scene-json", "merged-text", "segment-pngs", "annotated-pano")


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_config_file(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read config file: {exc}")
    except tomllib.TOMLDecodeError as exc:
        _fail(EXIT_CONFIG, f"bad config file {path}: {exc}")
    raise AssertionError("unreachable")


def _resolve(flag, config: dict, key: str, default):
    """flags > env (handled by click) > config file > default."""
    if flag is not None:
        return flag
    if key in config:
        return config[key]
    return default


def _guess_format(path: Path, fmt: str | None) -> str:
    if fmt is not None:
        return fmt
    guessed = _EXTENSION_FORMATS.get(path.suffix.lower())
    if guessed is None:
        _fail(EXIT_CONFIG, f"cannot infer format from {path.name!r}; pass --format")
    return guessed


def _read_intrinsics_arg(path: Path | None) -> projection.SensorIntrinsics:
    if path is None:
        return projection.SensorIntrinsics.profile("os1-128")
    if not path.is_file():
        _fail(EXIT_IO, f"intrinsics file not found: {path}")
    try:
        return projection.read_intrinsics(path)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        _fail(EXIT_CONFIG, f"bad intrinsics file: {exc}")
    raise AssertionError("unreachable")


def _load_input_panorama(
    input_path: Path, fmt: str | None, intrinsics_path: Path | None, range_metric: str
) -> tuple[projection.PanoramaImage, pointcloud.PointCloud | None, str]:
    """Panorama from either a cloud file or a persisted ``*_range.png``."""
    if input_path.suffix.lower() == ".png":
        name = input_path.name
        stem = name[: -len("_range.png")] if name.endswith("_range.png") else input_path.stem
        if intrinsics_path is None:
            intrinsics_path = input_path.with_name(f"{stem}_intrinsics.toml")
            if not intrinsics_path.is_file():
                _fail(
                    EXIT_CONFIG,
                    f"no --intrinsics given and {intrinsics_path.name} not found "
                    "next to the panorama",
                )
        if not input_path.is_file():
            _fail(EXIT_IO, f"panorama file not found: {input_path}")
        _read_intrinsics_arg(intrinsics_path)  # fail early with the right exit code
        try:
            pano = projection.load_panorama(input_path, intrinsics_path)
        except OSError as exc:
            _fail(EXIT_IO, f"cannot load panorama: {exc}")
        except ValueError as exc:
            _fail(EXIT_CONFIG, f"panorama does not match intrinsics: {exc}")
        return pano, None, stem

    fmt = _guess_format(input_path, fmt)
    intr = _read_intrinsics_arg(intrinsics_path)
    try:
        cloud = pointcloud.parse_cloud(input_path, fmt)
    except FileNotFoundError as exc:
        _fail(EXIT_IO, str(exc))
    except FormatMismatch as exc:
        _fail(EXIT_CONFIG, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    pano = projection.project_cloud(cloud, intr, range_metric=range_metric)
    return pano, cloud, input_path.stem


@click.group()
def main() -> None:
    """Panoramic LiDAR imaging, captioning and object localization."""


@main.command("project")
@click.argument("input_path", metavar="CLOUD", type=click.Path(path_type=Path))
@click.option("--format", "fmt", type=click.Choice(pointcloud.FORMATS), default=None,
              help="Input format; inferred from the extension when omitted.")
@click.option("--intrinsics", type=click.Path(path_type=Path), default=None,
              help="Intrinsics TOML; defaults to the os1-128 profile.")
@click.option("--out", type=click.Path(path_type=Path), default=Path("."), show_default=True)
@click.option("--stem", default=None, help="Output filename stem (default: input stem).")
@click.option("--range-metric", type=click.Choice(projection.RANGE_METRICS),
              default="horizontal", show_default=True,
              help="euclidean adds z to the stored distance; non-standard.")
def cmd_project(input_path: Path, fmt: str | None, intrinsics: Path | None, out: Path,
                stem: str | None, range_metric: str) -> None:
    """Rasterize a point cloud into panorama PNGs plus intrinsics TOML."""
    fmt = _guess_format(input_path, fmt)
    intr = _read_intrinsics_arg(intrinsics)
    try:
        cloud = pointcloud.parse_cloud(input_path, fmt)
    except FileNotFoundError as exc:
        _fail(EXIT_IO, str(exc))
    except FormatMismatch as exc:
        _fail(EXIT_CONFIG, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    pano = projection.project_cloud(cloud, intr, range_metric=range_metric)
    try:
        written = projection.write_panorama(pano, out, stem or input_path.stem)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write outputs: {exc}")
    s = pano.stats
    click.echo(
        f"points={len(cloud)} projected={s.projected} out_of_fov={s.out_of_fov} "
        f"degenerate={s.degenerate} malformed={cloud.n_malformed}"
    )
    for name, path in written.items():
        click.echo(f"{name}: {path}")


@main.command("segment")
@click.argument("input_path", metavar="CLOUD_OR_RANGE_PNG", type=click.Path(path_type=Path))
@click.option("--format", "fmt", type=click.Choice(pointcloud.FORMATS), default=None)
@click.option("--intrinsics", type=click.Path(path_type=Path), default=None)
@click.option("--out", type=click.Path(path_type=Path), default=Path("."), show_default=True)
@click.option("--stem", default=None)
def cmd_segment(input_path: Path, fmt: str | None, intrinsics: Path | None, out: Path,
                stem: str | None) -> None:
    """Split a panorama into the four 90-degree view PNGs."""
    pano, _, in_stem = _load_input_panorama(input_path, fmt, intrinsics, "horizontal")
    try:
        segments = segmentation.split_panorama(pano)
    except BadWidth as exc:
        _fail(EXIT_CONFIG, str(exc))
    try:
        written = segmentation.write_segment_pngs(segments, out, stem or in_stem)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write outputs: {exc}")
    for label, path in written.items():
        click.echo(f"{label.value}: {path}")


@main.command("analyze")
@click.argument("input_path", metavar="CLOUD_OR_RANGE_PNG", type=click.Path(path_type=Path))
@click.option("--format", "fmt", type=click.Choice(pointcloud.FORMATS), default=None)
@click.option("--intrinsics", type=click.Path(path_type=Path), default=None)
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="TOML file with backend/endpoint/fixture/timeout defaults.")
@click.option("--backend", "backend_kind", type=click.Choice(["mock", "remote"]), default=None)
@click.option("--endpoint", envvar="PANOLIDAR_ENDPOINT", default=None,
              help="Remote backend base URL [env: PANOLIDAR_ENDPOINT].")
@click.option("--fixture", type=click.Path(path_type=Path), default=None,
              help="Mock backend fixture JSON.")
@click.option("--timeout", envvar="PANOLIDAR_TIMEOUT", type=float, default=None,
              help="Per-request timeout in seconds [env: PANOLIDAR_TIMEOUT].")
@click.option("--prompt", default=None, help="Optional detection prompt, passed through.")
@click.option("--frame-id", default=None, help="Scene frame id (default: input stem).")
@click.option("--out", type=click.Path(path_type=Path), default=Path("."), show_default=True)
@click.option("--strict", is_flag=True, help="Fail on any backend error instead of warning.")
@click.option("--emit", "emits", type=click.Choice(EMIT_CHOICES), multiple=True,
              help="Artifacts to write; default scene-json and merged-text.")
def cmd_analyze(input_path: Path, fmt: str | None, intrinsics: Path | None,
                config_path: Path | None, backend_kind: str | None, endpoint: str | None,
                fixture: Path | None, timeout: float | None, prompt: str | None,
                frame_id: str | None, out: Path, strict: bool,
                emits: tuple[str, ...]) -> None:
    """Run the full pipeline and write the fused scene description."""
    config = _load_config_file(config_path)
    backend_kind = _resolve(backend_kind, config, "backend", "mock")
    endpoint = _resolve(endpoint, config, "endpoint", None)
    fixture = _resolve(fixture, config, "fixture", None)
    timeout = float(_resolve(timeout, config, "timeout", backend_mod.DEFAULT_TIMEOUT))
    emits = emits or ("scene-json", "merged-text")

    if backend_kind == "remote" and not endpoint:
        _fail(EXIT_CONFIG, "--backend remote requires --endpoint (or PANOLIDAR_ENDPOINT)")
    if backend_kind == "mock" and not fixture:
        _fail(EXIT_CONFIG, "--backend mock requires --fixture")

    pano, _, in_stem = _load_input_panorama(input_path, fmt, intrinsics, "horizontal")
    frame_id = frame_id or in_stem
    try:
        segments = segmentation.split_panorama(pano)
    except BadWidth as exc:
        _fail(EXIT_CONFIG, str(exc))

    if backend_kind == "mock":
        try:
            handle: backend_mod.Backend = backend_mod.mock_backend(Path(fixture))
        except FixtureParseError as exc:
            _fail(EXIT_CONFIG, str(exc))
    else:
        handle = backend_mod.RemoteBackend(str(endpoint), timeout=timeout)

    analyses = backend_mod.analyze_segments(segments, handle, prompt=prompt)
    if strict:
        errors = [a.error for a in analyses if a.error is not None]
        if errors:
            for err in errors:
                click.echo(f"error: {err}", err=True)
            protocol = any(e.startswith("ProtocolError") for e in errors)
            sys.exit(EXIT_PROTOCOL if protocol else EXIT_BACKEND)

    objects = {a.label: localization.localize(a, pano) for a in analyses}
    scene = fusion.merge_scene({a.label: a for a in analyses}, objects, frame_id=frame_id)

    try:
        out.mkdir(parents=True, exist_ok=True)
        if "scene-json" in emits:
            path = out / f"{frame_id}_scene.json"
            path.write_text(fusion.render_scene_json(scene), encoding="utf-8")
            click.echo(f"scene-json: {path}")
        if "merged-text" in emits:
            path = out / f"{frame_id}_merged.txt"
            path.write_text(scene.merged_text + "\n", encoding="utf-8")
            click.echo(f"merged-text: {path}")
        if "segment-pngs" in emits:
            for label, path in segmentation.write_segment_pngs(segments, out, frame_id).items():
                click.echo(f"segment-png {label.value}: {path}")
        if "annotated-pano" in emits:
            _, full = _dispatch_full(pano)
            canvas = annotate_mod.annotate_panorama(
                segmentation.render_view(full), fusion.scene_to_dict(scene)
            )
            path = out / f"{frame_id}_annotated.png"
            Image.fromarray(canvas).save(path)
            click.echo(f"annotated-pano: {path}")
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write outputs: {exc}")

    for warning in scene.warnings:
        click.echo(f"warning: {warning}", err=True)


def _dispatch_full(pano: projection.PanoramaImage) -> tuple[str, np.ndarray]:
    for name in segmentation.DISPATCH_PRIORITY:
        if name in pano.channels:
            return name, pano.channels[name]
    return "range", pano.range


@main.command("annotate")
@click.argument("pano_png", type=click.Path(path_type=Path))
@click.argument("scene_json", type=click.Path(path_type=Path))
@click.option("--out", type=click.Path(path_type=Path), required=True)
def cmd_annotate(pano_png: Path, scene_json: Path, out: Path) -> None:
    """Draw a scene's boxes and (R[m], A°) labels onto a panorama PNG."""
    if not pano_png.is_file():
        _fail(EXIT_IO, f"panorama file not found: {pano_png}")
    if not scene_json.is_file():
        _fail(EXIT_IO, f"scene file not found: {scene_json}")
    try:
        scene = json.loads(scene_json.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        _fail(EXIT_CONFIG, f"bad scene JSON: {exc}")
    image = np.asarray(Image.open(pano_png))
    try:
        canvas = annotate_mod.annotate_panorama(image, scene)
    except (DimensionMismatch, KeyError, TypeError) as exc:
        _fail(EXIT_CONFIG, f"scene does not fit this panorama: {exc}")
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        Image.fromarray(canvas).save(out)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot write {out}: {exc}")
    click.echo(f"annotated: {out}")


if __name__ == "__main__":
    main()
