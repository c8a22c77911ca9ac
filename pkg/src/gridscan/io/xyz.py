"""Plain-text XYZ point files.

Rows are whitespace-separated ``x y z [r g b] [label]`` with a constant
column layout across the file; ``#`` starts a comment line.
"""

import numpy as np

from ..cloud import PointCloud
from .common import FormatError, as_bytes

# column count -> (has_rgb, has_label)
_LAYOUTS = {3: (False, False), 4: (False, True), 6: (True, False), 7: (True, True)}


def parse_xyz(data, schema=None) -> PointCloud:
    """Parse an XYZ text stream into a PointCloud.

    Attributes are present iff the corresponding columns are present.
    Empty input yields an empty cloud. Raises FormatError with the
    offending 1-based line number on bad tokens or ragged rows.
    """
    text = as_bytes(data).decode("utf-8")
    rows = []
    lines = []  # original line numbers, for error reporting
    ncols = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if ncols is None:
            ncols = len(tokens)
            if ncols not in _LAYOUTS:
                raise FormatError(
                    f"line {lineno}: unsupported column count {ncols} "
                    f"(expected one of {sorted(_LAYOUTS)})")
        elif len(tokens) != ncols:
            raise FormatError(
                f"line {lineno}: expected {ncols} columns, got {len(tokens)}")
        try:
            rows.append([float(t) for t in tokens])
        except ValueError:
            bad = next(t for t in tokens if not _is_number(t))
            raise FormatError(f"line {lineno}: bad token {bad!r}") from None
        lines.append(lineno)

    if not rows:
        return PointCloud(positions=np.empty((0, 3)), schema=schema)

    values = np.asarray(rows, dtype=np.float64)
    has_rgb, has_label = _LAYOUTS[ncols]
    positions = values[:, :3]
    rgb = None
    labels = None
    col = 3
    if has_rgb:
        rgb_f = values[:, col:col + 3]
        if np.any((rgb_f < 0) | (rgb_f > 255)):
            bad_row = int(np.argwhere((rgb_f < 0) | (rgb_f > 255))[0, 0])
            raise FormatError(f"line {lines[bad_row]}: rgb value outside [0, 255]")
        rgb = rgb_f.astype(np.uint8)
        col += 3
    if has_label:
        labels = values[:, col].astype(np.uint8)
    return PointCloud(positions=positions, rgb=rgb, labels=labels, schema=schema)


def write_xyz(cloud: PointCloud) -> bytes:
    """Serialize positions (17 significant digits) plus rgb/label columns."""
    cols = [np.char.mod("%.17g", cloud.positions[:, i]) for i in range(3)]
    if cloud.rgb is not None:
        cols += [np.char.mod("%d", cloud.rgb[:, i]) for i in range(3)]
    if cloud.labels is not None:
        cols.append(np.char.mod("%d", cloud.labels))
    if not len(cloud.positions):
        return b""
    grid = np.stack(cols, axis=1)
    body = "\n".join(" ".join(row) for row in grid)
    return (body + "\n").encode("utf-8")


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False
