"""Binary field files (``.sfld``) with a JSON sidecar.

Layout: 64-byte little-endian header

    0   4s   magic b"SFLD"
    4   u32  format version
    8   u32  dim
    12  u32  N
    16  f64  L
    24  u32  component count
    28  ..   zero padding to 64

followed by ``ncomp * N**dim`` float64 values, row-major, one component
after another.  ``<path>.json`` carries the grid parameters and a free-form
provenance string.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .fields import Grid, ScalarField, VectorField

MAGIC = b"SFLD"
VERSION = 1
HEADER_SIZE = 64
_HEAD = struct.Struct("<4sIIIdI")


def sidecar_path(path) -> Path:
    p = Path(path)
    return p.with_name(p.name + ".json")


def write_field(path, field: ScalarField | VectorField, provenance: str = "") -> Path:
    path = Path(path)
    comps = [field] if isinstance(field, ScalarField) else list(field)
    g = comps[0].grid
    head = _HEAD.pack(MAGIC, VERSION, g.dim, g.N, float(g.L), len(comps))
    head = head + b"\0" * (HEADER_SIZE - len(head))
    data = np.stack([c.values for c in comps]).astype("<f8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(data.tobytes(order="C"))
    meta = {
        "format": "SFLD",
        "version": VERSION,
        "dim": g.dim,
        "N": g.N,
        "L": g.L,
        "components": len(comps),
        "kind": "scalar" if isinstance(field, ScalarField) else "vector",
        "provenance": provenance,
    }
    sidecar_path(path).write_text(json.dumps(meta, indent=2, sort_keys=True))
    return path


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        raw = fh.read(HEADER_SIZE)
    if len(raw) < HEADER_SIZE:
        raise ValueError(f"{path}: truncated header")
    magic, version, dim, N, L, ncomp = _HEAD.unpack_from(raw)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    return {"dim": dim, "N": N, "L": L, "components": ncomp}


def read_field(path) -> ScalarField | VectorField:
    h = read_header(path)
    grid = Grid(h["dim"], h["L"], h["N"])
    count = h["components"] * grid.N**grid.dim
    data = np.fromfile(path, dtype="<f8", offset=HEADER_SIZE)
    if data.size != count:
        raise ValueError(f"{path}: expected {count} values, found {data.size}")
    data = data.reshape((h["components"],) + grid.shape).astype(float)
    kind = None
    sc = sidecar_path(path)
    if sc.exists():
        kind = json.loads(sc.read_text()).get("kind")
    if h["components"] == 1 and kind != "vector":
        return ScalarField(grid, data[0])
    return VectorField.from_arrays(grid, data)
