"""Tabular and raw-array outputs.

Raw dumps: a 64-byte little-endian header (magic ``EMLF``, u32 version,
three u32 grid sizes, three f64 box lengths, zero padding) followed by the
scalar field as little-endian f64 in C order (z fastest). One file per
scalar component.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .spectral import GridSpec

MAGIC = b"EMLF"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sI3I3d20x")
assert HEADER.size == 64


def write_raw(path: str | Path, values: np.ndarray, grid: GridSpec) -> Path:
    values = np.asarray(values, dtype="<f8")
    if values.shape != grid.n:
        raise ValueError(f"expected a scalar field of shape {grid.n}, got {values.shape}")
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, FORMAT_VERSION, *grid.n, *grid.box))
        fh.write(np.ascontiguousarray(values).tobytes(order="C"))
    return path


def read_raw(path: str | Path) -> tuple[np.ndarray, GridSpec]:
    data = Path(path).read_bytes()
    magic, version, nx, ny, nz, lx, ly, lz = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: not an EMLF file")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported EMLF version {version}")
    grid = GridSpec((nx, ny, nz), (lx, ly, lz))
    body = np.frombuffer(data, dtype="<f8", offset=HEADER.size)
    if body.size != grid.npoints:
        raise ValueError(f"{path}: expected {grid.npoints} values, found {body.size}")
    return body.reshape(grid.n).astype(float), grid


def write_components(prefix: str | Path, field: np.ndarray, grid: GridSpec, names: Sequence[str]) -> list[Path]:
    """Dump each leading-axis component as ``<prefix>_<name>.emlf``."""
    flat = np.asarray(field).reshape((-1,) + grid.n)
    if len(names) != flat.shape[0]:
        raise ValueError("one name per component")
    prefix = Path(prefix)
    return [write_raw(prefix.with_name(f"{prefix.name}_{n}.emlf"), f, grid) for n, f in zip(names, flat)]


def fmt(v) -> str:
    """17 significant digits, '.' decimal; integers and strings pass through."""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """RFC-4180 CSV (CRLF line ends, minimal quoting)."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if np.isfinite(f) else str(f)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_json(path: str | Path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
