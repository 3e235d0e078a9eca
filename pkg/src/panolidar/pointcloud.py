"""Point-cloud ingestion.

Parses sensor dumps from disk into an immutable in-memory cloud. Three
formats are supported:

* ``csv``       — ``x,y,z[,ambient,signal,reflectivity]``, no header needed,
                  lines starting with ``#`` are skipped.
* ``pcd_ascii`` — the ASCII subset of the PCD format; FIELDS must include
                  ``x y z``, extra fields are ignored unless named
                  ``ambient``/``signal``/``reflectivity``.
* ``raw_f32``   — little-endian packed ``(x, y, z)`` float32 triples.

Sensor dumps are noisy: malformed records are skipped and counted, never
aborted on. An empty file is a valid empty cloud.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatMismatch

FORMATS = ("csv", "pcd_ascii", "raw_f32")

# Optional per-point channels, in canonical column order.
CHANNEL_NAMES = ("ambient", "signal", "reflectivity")


@dataclass(frozen=True)
class Point3:
    """One LiDAR return in the sensor frame.

    x is forward-positive, y leftward-positive, z up-positive, all in
    meters. The channel counts are optional unsigned 16-bit values.
    """

    x: float
    y: float
    z: float
    ambient: int | None = None
    signal: int | None = None
    reflectivity: int | None = None

    @property
    def is_degenerate(self) -> bool:
        """True when x = y = 0: the return has no usable azimuth."""
        return self.x == 0.0 and self.y == 0.0


@dataclass
class PointCloud:
    """Ordered, immutable collection of returns plus parse provenance.

    ``xyz`` is an (N, 3) float64 array; ``channels`` maps channel name to
    an (N,) uint16 array and only holds channels present in the source.
    ``n_malformed`` counts records skipped during parsing.
    """

    xyz: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)
    source: str = ""
    n_malformed: int = 0

    def __post_init__(self) -> None:
        self.xyz = np.ascontiguousarray(self.xyz, dtype=np.float64).reshape(-1, 3)
        self.xyz.flags.writeable = False
        for name, arr in list(self.channels.items()):
            arr = np.ascontiguousarray(arr, dtype=np.uint16)
            arr.flags.writeable = False
            self.channels[name] = arr
            if arr.shape != (len(self),):
                raise ValueError(f"channel {name!r} length {arr.shape} != {len(self)} points")

    def __len__(self) -> int:
        return self.xyz.shape[0]

    def __getitem__(self, i: int) -> Point3:
        x, y, z = self.xyz[i]
        opt = {name: int(arr[i]) for name, arr in self.channels.items()}
        return Point3(float(x), float(y), float(z), **opt)

    def iter_points(self):
        for i in range(len(self)):
            yield self[i]

    @classmethod
    def from_points(cls, points: list[Point3], source: str = "") -> "PointCloud":
        xyz = np.array([(p.x, p.y, p.z) for p in points], dtype=np.float64).reshape(-1, 3)
        channels: dict[str, np.ndarray] = {}
        for name in CHANNEL_NAMES:
            vals = [getattr(p, name) for p in points]
            if points and all(v is not None for v in vals):
                channels[name] = np.array(vals, dtype=np.uint16)
        return cls(xyz=xyz, channels=channels, source=source)


def horizontal_range(p: Point3) -> float:
    """Ground-plane distance sqrt(x^2 + y^2); z deliberately ignored."""
    return math.sqrt(p.x * p.x + p.y * p.y)


def euclidean_range(p: Point3) -> float:
    """Full 3D distance sqrt(x^2 + y^2 + z^2).

    Extension beyond the standard pipeline, which localizes objects on the
    ground plane; opt in via ``range_metric="euclidean"`` where offered.
    """
    return math.sqrt(p.x * p.x + p.y * p.y + p.z * p.z)


def parse_cloud(path: str | Path, format: str) -> PointCloud:
    """Parse a point-cloud file into a :class:`PointCloud`.

    Raises FileNotFoundError when the file is missing and
    :class:`FormatMismatch` when the file disagrees with the declared
    format. A zero-byte file is an empty cloud, not an error.
    """
    path = Path(path)
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    if not path.is_file():
        raise FileNotFoundError(f"point-cloud file not found: {path}")
    if format == "csv":
        return _parse_csv(path)
    if format == "pcd_ascii":
        return _parse_pcd_ascii(path)
    return _parse_raw_f32(path)


def write_csv(cloud: PointCloud, path: str | Path) -> None:
    """Serialize a cloud to the CSV layout accepted by :func:`parse_cloud`.

    Floats are written with shortest round-trip precision, so
    parse -> write -> parse reproduces coordinates exactly.
    """
    path = Path(path)
    names = [n for n in CHANNEL_NAMES if n in cloud.channels]
    with path.open("w", encoding="utf-8") as fh:
        fh.write("# x,y,z" + ("," + ",".join(names) if names else "") + "\n")
        for i in range(len(cloud)):
            x, y, z = cloud.xyz[i]
            row = [repr(float(x)), repr(float(y)), repr(float(z))]
            row += [str(int(cloud.channels[n][i])) for n in names]
            fh.write(",".join(row) + "\n")


def _finite(*vals: float) -> bool:
    return all(math.isfinite(v) for v in vals)


def _parse_channel_value(text: str) -> int:
    """Channel counts are unsigned 16-bit; accept '120' and '120.0'."""
    v = float(text)
    if not v.is_integer() or not 0 <= v <= 65535:
        raise ValueError(f"channel value out of uint16 range: {text}")
    return int(v)


def _parse_csv(path: Path) -> PointCloud:
    rows: list[tuple[float, float, float]] = []
    chan_rows: list[tuple[int, ...]] = []
    n_malformed = 0
    arity: int | None = None

    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = [f.strip() for f in line.split(",")]
            if arity is None:
                # First data record fixes the column layout for the file.
                if not 3 <= len(fields) <= 6:
                    raise FormatMismatch(
                        f"{path}: first record has {len(fields)} columns, expected 3..6"
                    )
                try:
                    parsed = _parse_csv_record(fields)
                except ValueError as exc:
                    raise FormatMismatch(f"{path}: first record is not numeric: {exc}") from exc
                arity = len(fields)
                rows.append(parsed[0])
                chan_rows.append(parsed[1])
                continue
            if len(fields) != arity:
                n_malformed += 1
                continue
            try:
                parsed = _parse_csv_record(fields)
            except ValueError:
                n_malformed += 1
                continue
            rows.append(parsed[0])
            chan_rows.append(parsed[1])

    n_channels = (arity or 3) - 3
    channels = {
        CHANNEL_NAMES[c]: np.array([r[c] for r in chan_rows], dtype=np.uint16)
        for c in range(n_channels)
    }
    xyz = np.array(rows, dtype=np.float64).reshape(-1, 3)
    return PointCloud(xyz=xyz, channels=channels, source=f"{path}#csv", n_malformed=n_malformed)


def _parse_csv_record(fields: list[str]) -> tuple[tuple[float, float, float], tuple[int, ...]]:
    x, y, z = float(fields[0]), float(fields[1]), float(fields[2])
    if not _finite(x, y, z):
        raise ValueError("non-finite coordinate")
    chans = tuple(_parse_channel_value(f) for f in fields[3:])
    return (x, y, z), chans


def _parse_pcd_ascii(path: Path) -> PointCloud:
    text = path.read_text(encoding="utf-8", errors="replace")
    if not text.strip():
        return PointCloud(xyz=np.empty((0, 3)), source=f"{path}#pcd_ascii")

    lines = text.splitlines()
    header: dict[str, list[str]] = {}
    data_start = None
    for i, line in enumerate(lines):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        key = parts[0].upper()
        header[key] = parts[1:]
        if key == "DATA":
            data_start = i + 1
            break

    if data_start is None or "FIELDS" not in header:
        raise FormatMismatch(f"{path}: missing PCD header (FIELDS/DATA)")
    if header["DATA"] != ["ascii"]:
        raise FormatMismatch(f"{path}: DATA is {' '.join(header['DATA'])!r}, only ascii supported")
    fields = header["FIELDS"]
    for required in ("x", "y", "z"):
        if required not in fields:
            raise FormatMismatch(f"{path}: FIELDS lacks {required!r}")
    counts = header.get("COUNT")
    if counts is not None and any(c != "1" for c in counts):
        raise FormatMismatch(f"{path}: multi-count fields not supported in ascii subset")

    ix, iy, iz = fields.index("x"), fields.index("y"), fields.index("z")
    chan_cols = {name: fields.index(name) for name in CHANNEL_NAMES if name in fields}

    try:
        n_declared = int(header.get("POINTS", header.get("WIDTH", ["0"]))[0])
    except ValueError as exc:
        raise FormatMismatch(f"{path}: bad POINTS/WIDTH value") from exc

    rows: list[tuple[float, float, float]] = []
    chan_rows: dict[str, list[int]] = {name: [] for name in chan_cols}
    n_malformed = 0
    for line in lines[data_start:]:
        line = line.strip()
        if not line:
            continue
        if len(rows) + n_malformed >= n_declared:
            break
        parts = line.split()
        if len(parts) != len(fields):
            n_malformed += 1
            continue
        try:
            x, y, z = float(parts[ix]), float(parts[iy]), float(parts[iz])
            if not _finite(x, y, z):
                raise ValueError("non-finite coordinate")
            chans = {name: _parse_channel_value(parts[col]) for name, col in chan_cols.items()}
        except ValueError:
            n_malformed += 1
            continue
        rows.append((x, y, z))
        for name, v in chans.items():
            chan_rows[name].append(v)

    xyz = np.array(rows, dtype=np.float64).reshape(-1, 3)
    channels = {name: np.array(vals, dtype=np.uint16) for name, vals in chan_rows.items()}
    return PointCloud(
        xyz=xyz, channels=channels, source=f"{path}#pcd_ascii", n_malformed=n_malformed
    )


def _parse_raw_f32(path: Path) -> PointCloud:
    raw = path.read_bytes()
    if len(raw) % 12 != 0:
        raise FormatMismatch(
            f"{path}: {len(raw)} bytes is not a whole number of 12-byte xyz records"
        )
    flat = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(-1, 3)
    finite = np.isfinite(flat).all(axis=1)
    n_malformed = int((~finite).sum())
    return PointCloud(xyz=flat[finite], source=f"{path}#raw_f32", n_malformed=n_malformed)
