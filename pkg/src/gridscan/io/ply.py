"""PLY 1.0 reader/writer (ascii and binary_little_endian).

The reader maps recognized vertex properties onto PointCloud attributes
and skips anything else with a warning record; real scanner exports
routinely carry vendor columns. The writer emits float64 positions and
a uint8 ``label`` property, and its output round-trips bit-exactly.
"""

import logging

import numpy as np

from ..cloud import NORMAL_NORM_TOL, PointCloud
from .common import FormatError, as_bytes

log = logging.getLogger(__name__)

_PLY_TO_NUMPY = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}
_FLOAT_TYPES = {"f4", "f8"}
_INT_TYPES = {"i1", "u1", "i2", "u2", "i4", "u4"}
_LABEL_ALIASES = ("label", "class", "scalar_Classification")


def parse_ply(data, schema=None, warnings=None) -> PointCloud:
    """Parse a PLY byte stream into a PointCloud.

    Parameters
    ----------
    data : bytes, str, or binary file-like
    schema : ClassSchema, optional
        Attached to the result and used to validate labels.
    warnings : list, optional
        If given, skipped-property messages are appended to it (they are
        always logged).

    Raises FormatError on a garbled header, big-endian payloads, list
    properties on the vertex element, or a truncated body.
    """
    raw = as_bytes(data)
    header, body_offset = _split_header(raw)
    fmt, elements = _parse_header(header)

    if fmt == "binary_big_endian":
        raise FormatError("unsupported format binary_big_endian")

    if not elements or elements[0][0] != "vertex":
        before = [name for name, _, _ in elements if name != "vertex"]
        if any(name == "vertex" for name, _, _ in elements):
            raise FormatError(
                f"elements {before} precede vertex; cannot skip their payload")
        raise FormatError("no vertex element in header")
    _, count, props = elements[0]

    for pname, ptype in props:
        if ptype == "list":
            raise FormatError(f"list property {pname!r} on vertex element is unsupported")

    if fmt == "ascii":
        columns = _read_ascii_vertices(raw[body_offset:], props, count)
    else:
        columns = _read_binary_vertices(raw[body_offset:], props, count)

    return _assemble(columns, props, count, schema, warnings)


def _split_header(raw: bytes):
    end = raw.find(b"end_header")
    if not raw.startswith(b"ply") or end < 0:
        raise FormatError("not a PLY file (missing 'ply'/'end_header')")
    nl = raw.find(b"\n", end)
    if nl < 0:
        raise FormatError("header not terminated by newline")
    return raw[:nl].decode("ascii", errors="replace"), nl + 1


def _parse_header(header: str):
    fmt = None
    elements = []  # (name, count, [(prop_name, numpy_type or "list")])
    for line in header.splitlines():
        line = line.strip()
        if not line or line == "ply" or line.startswith("comment") \
                or line.startswith("obj_info"):
            continue
        parts = line.split()
        if parts[0] == "format":
            if len(parts) != 3 or parts[2] != "1.0":
                raise FormatError(f"garbled format line: {line!r}")
            fmt = parts[1]
            if fmt not in ("ascii", "binary_little_endian", "binary_big_endian"):
                raise FormatError(f"unknown PLY format {fmt!r}")
        elif parts[0] == "element":
            if len(parts) != 3:
                raise FormatError(f"garbled element line: {line!r}")
            elements.append((parts[1], int(parts[2]), []))
        elif parts[0] == "property":
            if not elements:
                raise FormatError("property before any element")
            if parts[1] == "list":
                elements[-1][2].append((parts[-1], "list"))
                continue
            if len(parts) != 3:
                raise FormatError(f"garbled property line: {line!r}")
            ptype = _PLY_TO_NUMPY.get(parts[1])
            if ptype is None:
                raise FormatError(f"unknown property type {parts[1]!r}")
            elements[-1][2].append((parts[2], ptype))
        elif parts[0] == "end_header":
            break
        else:
            raise FormatError(f"unrecognized header line: {line!r}")
    if fmt is None:
        raise FormatError("header has no format line")
    return fmt, elements


def _read_binary_vertices(body: bytes, props, count):
    dtype = np.dtype([(name, "<" + t) for name, t in props])
    need = count * dtype.itemsize
    if len(body) < need:
        raise FormatError(
            f"truncated vertex payload: expected {need} bytes, got {len(body)}")
    rec = np.frombuffer(body[:need], dtype=dtype)
    return {name: rec[name] for name, _ in props}


def _read_ascii_vertices(body: bytes, props, count):
    lines = [ln for ln in body.decode("utf-8").splitlines() if ln.strip()]
    if len(lines) < count:
        raise FormatError(
            f"truncated vertex payload: expected {count} rows, got {len(lines)}")
    columns = {name: [] for name, _ in props}
    names = [name for name, _ in props]
    for i in range(count):
        tokens = lines[i].split()
        if len(tokens) != len(props):
            raise FormatError(
                f"vertex row {i}: expected {len(props)} values, got {len(tokens)}")
        for name, tok in zip(names, tokens):
            columns[name].append(tok)
    out = {}
    for name, t in props:
        conv = np.float64 if t in _FLOAT_TYPES else np.int64
        try:
            col = np.array([conv(tok) for tok in columns[name]])
        except ValueError as e:
            raise FormatError(f"bad value in column {name!r}: {e}") from None
        out[name] = col.astype("<" + t)
    return out


def _assemble(columns, props, count, schema, warnings):
    def warn(msg):
        log.warning("%s", msg)
        if warnings is not None:
            warnings.append(msg)

    types = dict(props)
    used = set()

    def grab(names, allowed, target):
        got = []
        for nm in names:
            if nm in columns and types[nm] in allowed:
                got.append(nm)
        if len(got) == len(names):
            used.update(got)
            return got
        if got:
            warn(f"partial {target} properties {got} skipped")
        return None

    pos_names = grab(("x", "y", "z"), _FLOAT_TYPES, "position")
    if pos_names is None:
        raise FormatError("vertex element lacks float x/y/z properties")
    positions = np.column_stack([columns[nm].astype(np.float64) for nm in pos_names])

    rgb = None
    rgb_names = grab(("red", "green", "blue"), {"u1"}, "rgb")
    if rgb_names is not None:
        rgb = np.column_stack([columns[nm] for nm in rgb_names])

    normals = None
    n_names = grab(("nx", "ny", "nz"), _FLOAT_TYPES, "normal")
    if n_names is not None:
        normals = np.column_stack([columns[nm].astype(np.float64) for nm in n_names])
        normals = _sanitize_normals(normals, warn)

    intensity = None
    if "intensity" in columns and types["intensity"] in _FLOAT_TYPES:
        used.add("intensity")
        intensity = columns["intensity"].astype(np.float64)

    labels = None
    for alias in _LABEL_ALIASES:
        if alias in columns and types[alias] in _INT_TYPES:
            if labels is None:
                used.add(alias)
                vals = columns[alias]
                if count and (vals.min() < 0 or vals.max() > 255):
                    raise FormatError(f"label property {alias!r} outside uint8 range")
                labels = vals.astype(np.uint8)
            else:
                warn(f"duplicate classification property {alias!r} skipped")

    for name, _ in props:
        if name not in used:
            warn(f"unrecognized vertex property {name!r} skipped")

    return PointCloud(positions=positions, rgb=rgb, intensity=intensity,
                      normals=normals, labels=labels, schema=schema)


def _sanitize_normals(normals, warn):
    if not len(normals):
        return normals
    norms = np.linalg.norm(normals, axis=1)
    bad = np.abs(norms - 1.0) > NORMAL_NORM_TOL
    if not bad.any():
        return normals
    if np.any(norms[bad] == 0.0):
        raise FormatError("zero-length normal vector")
    # only touch offending rows so clean files round-trip bit-exactly
    warn(f"renormalized {int(bad.sum())} non-unit normal(s)")
    normals = normals.copy()
    normals[bad] /= norms[bad, None]
    return normals


def write_ply(cloud: PointCloud, encoding: str = "binary_little_endian") -> bytes:
    """Serialize a PointCloud as PLY; round-trippable by parse_ply."""
    if encoding not in ("ascii", "binary_little_endian"):
        raise ValueError(f"encoding must be ascii or binary_little_endian, got {encoding!r}")

    fields = [("x", "double"), ("y", "double"), ("z", "double")]
    arrays = [cloud.positions[:, 0], cloud.positions[:, 1], cloud.positions[:, 2]]
    if cloud.rgb is not None:
        fields += [("red", "uchar"), ("green", "uchar"), ("blue", "uchar")]
        arrays += [cloud.rgb[:, 0], cloud.rgb[:, 1], cloud.rgb[:, 2]]
    if cloud.normals is not None:
        fields += [("nx", "double"), ("ny", "double"), ("nz", "double")]
        arrays += [cloud.normals[:, 0], cloud.normals[:, 1], cloud.normals[:, 2]]
    if cloud.intensity is not None:
        fields.append(("intensity", "double"))
        arrays.append(cloud.intensity)
    if cloud.labels is not None:
        fields.append(("label", "uchar"))
        arrays.append(cloud.labels)

    header = ["ply", f"format {encoding} 1.0",
              f"element vertex {cloud.point_count}"]
    header += [f"property {t} {nm}" for nm, t in fields]
    header.append("end_header")
    head = ("\n".join(header) + "\n").encode("ascii")

    if encoding == "binary_little_endian":
        dtype = np.dtype([(nm, "<" + _PLY_TO_NUMPY[t]) for nm, t in fields])
        rec = np.empty(cloud.point_count, dtype=dtype)
        for (nm, _), arr in zip(fields, arrays):
            rec[nm] = arr
        return head + rec.tobytes()

    cols = []
    for (_, t), arr in zip(fields, arrays):
        if t == "double":
            cols.append(np.char.mod("%.17g", arr))
        else:
            cols.append(np.char.mod("%d", arr))
    if not cloud.point_count:
        return head
    grid = np.stack(cols, axis=1)
    body = "\n".join(" ".join(row) for row in grid)
    return head + (body + "\n").encode("ascii")
