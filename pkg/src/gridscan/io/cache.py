"""GSC1 binary cache: fast bit-exact reload of ingested clouds.

Layout: magic ``GSC1``, uint32 little-endian metadata length, a JSON
metadata block (point count, attribute presence, schema), then the
attribute arrays concatenated in the order the metadata declares them.
"""

import json
from pathlib import Path

import numpy as np

from ..cloud import ClassSchema, PointCloud
from .common import FormatError

MAGIC = b"GSC1"

# attribute -> (dtype, per-point element count)
_ATTRS = {
    "positions": (np.float64, 3),
    "rgb": (np.uint8, 3),
    "intensity": (np.float64, 1),
    "normals": (np.float64, 3),
    "labels": (np.uint8, 1),
}


def write_cache(cloud: PointCloud, path) -> None:
    present = [name for name in _ATTRS if getattr(cloud, name) is not None]
    meta = {
        "point_count": cloud.point_count,
        "attributes": present,
        "schema": cloud.schema.to_dict() if cloud.schema is not None else None,
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(np.uint32(len(meta_bytes)).tobytes())
        f.write(meta_bytes)
        for name in present:
            f.write(np.ascontiguousarray(getattr(cloud, name)).tobytes())


def read_cache(path) -> PointCloud:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise FormatError(f"bad magic {raw[:4]!r}; not a GSC1 cache")
    if len(raw) < 8:
        raise FormatError("truncated cache header")
    meta_len = int(np.frombuffer(raw[4:8], dtype="<u4")[0])
    if len(raw) < 8 + meta_len:
        raise FormatError("metadata block shorter than declared length")
    try:
        meta = json.loads(raw[8:8 + meta_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"bad metadata block: {e}") from None

    n = meta["point_count"]
    present = meta["attributes"]
    unknown = [a for a in present if a not in _ATTRS]
    if unknown:
        raise FormatError(f"unknown attributes in metadata: {unknown}")

    expected = sum(n * _ATTRS[a][1] * np.dtype(_ATTRS[a][0]).itemsize for a in present)
    payload = raw[8 + meta_len:]
    if len(payload) != expected:
        raise FormatError(
            f"payload length mismatch: expected {expected} bytes, got {len(payload)}")

    fields = {}
    offset = 0
    for name in present:
        dtype, width = _ATTRS[name]
        nbytes = n * width * np.dtype(dtype).itemsize
        arr = np.frombuffer(payload[offset:offset + nbytes], dtype=dtype)
        fields[name] = arr.reshape(n, width) if width > 1 else arr
        offset += nbytes

    schema = ClassSchema.from_dict(meta["schema"]) if meta.get("schema") else None
    return PointCloud(schema=schema, **fields)
