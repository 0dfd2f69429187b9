"""File formats: PFM rasters, ASCII PLY point exports, JSON/JSONL helpers.

PFM here is the grayscale "Pf" variant: one float32 per pixel, scanlines
stored bottom-to-top, the scale line's sign encoding endianness (negative =
little-endian). Writers always emit little-endian with scale -1.0.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import SchemaError

SCHEMA_VERSION = 1


def write_pfm(path, data) -> None:
    arr = np.asarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise SchemaError(f"PFM writer needs a 2D array, got shape {arr.shape}")
    h, w = arr.shape
    with open(path, "wb") as f:
        f.write(b"Pf\n")
        f.write(f"{w} {h}\n".encode("ascii"))
        f.write(b"-1.0\n")
        np.flipud(arr).astype("<f4").tofile(f)


def read_pfm(path) -> np.ndarray:
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic != b"Pf":
            raise SchemaError(f"{path}: not a grayscale PFM (magic {magic!r})")
        dims = f.readline().split()
        if len(dims) != 2:
            raise SchemaError(f"{path}: malformed PFM dimension line")
        w, h = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        dtype = "<f4" if scale < 0 else ">f4"
        raw = np.fromfile(f, dtype=dtype, count=w * h)
    if raw.size != w * h:
        raise SchemaError(f"{path}: truncated PFM payload ({raw.size} of {w * h} values)")
    return np.flipud(raw.reshape(h, w)).astype(np.float64)


def write_ply_points(path, points, colors) -> None:
    """ASCII PLY of XYZ points with uchar RGB colors."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    cols = np.asarray(colors, dtype=np.int64).reshape(-1, 3)
    if len(pts) != len(cols):
        raise SchemaError("points and colors must have equal length")
    with open(path, "w", encoding="ascii") as f:
        f.write("ply\nformat ascii 1.0\n")
        f.write(f"element vertex {len(pts)}\n")
        f.write("property float x\nproperty float y\nproperty float z\n")
        f.write("property uchar red\nproperty uchar green\nproperty uchar blue\n")
        f.write("end_header\n")
        for (x, y, z), (r, g, b) in zip(pts, cols):
            f.write(f"{x:.6f} {y:.6f} {z:.6f} {r} {g} {b}\n")


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and tuples for json.dump."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dump_json(path, payload) -> None:
    """Canonical JSON document: sorted keys, 2-space indent, trailing newline."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_jsonable(payload), f, indent=2, sort_keys=True)
        f.write("\n")


def dump_jsonl(path, records) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(to_jsonable(rec), sort_keys=True))
            f.write("\n")


def load_json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def load_jsonl(path):
    records = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{lineno}: invalid JSON ({exc})")
    return records


def check_schema_version(record, source) -> None:
    """Reject records declaring a schema version other than ours; records
    without the field are accepted."""
    version = record.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"{source}: unsupported schema_version {version!r}")
