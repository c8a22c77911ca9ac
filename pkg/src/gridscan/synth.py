"""Synthetic corridor scenes with exact ground-truth labels.

Real corridor scans cannot be redistributed, so desk-scale verification
runs on generated scenes with known geometry: undulating ground,
vegetation blobs, lattice towers, sagging conductor spans, sparse
high-altitude noise, and a few deliberately mixed-class border patches
whose points are marked ambiguous for flagging tests. Generation is
fully deterministic in the seed.
"""

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud, TS40K
from .io import write_ply

PRESETS = ("corridor", "tower_radius", "power_line", "no_tower")

_NOISE, _GROUND, _LOW, _MED, _TOWER, _LINE = range(6)

_TOWER_STRUT_SPACING = 0.12
_WIRE_SPACING = 0.10
_CRITICAL_CAP = 0.045  # keep tower+line under 5% of the scene


@dataclass(frozen=True)
class SyntheticScene:
    cloud: PointCloud               # labeled, TS40K schema
    ambiguous: np.ndarray           # True on mixed-class border points
    preset: str
    seed: int


def gen_synthetic(preset: str, seed: int, out=None, total_points: int = 200_000) -> SyntheticScene:
    """Generate a labeled scene; optionally write it to a PLY file."""
    if preset not in PRESETS:
        raise ValueError(f"unknown preset {preset!r}; choose from {PRESETS}")
    rng = np.random.default_rng(seed)
    builder = {
        "corridor": _build_corridor,
        "tower_radius": _build_tower_radius,
        "power_line": _build_power_line,
        "no_tower": _build_no_tower,
    }[preset]
    scene = builder(rng, total_points)
    positions, labels, ambiguous = scene

    # place the corridor at an arbitrary yaw and world offset
    yaw = rng.uniform(0.0, np.pi)
    c, s = np.cos(yaw), np.sin(yaw)
    rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    offset = np.array([rng.uniform(-5000, 5000), rng.uniform(-5000, 5000), 0.0])
    positions = positions @ rot.T + offset

    cloud = PointCloud(positions=positions, labels=labels, schema=TS40K)
    result = SyntheticScene(cloud=cloud, ambiguous=ambiguous, preset=preset, seed=seed)
    if out is not None:
        with open(out, "wb") as f:
            f.write(write_ply(cloud, "binary_little_endian"))
    return result


class _Terrain:
    """Smooth undulating ground height field."""

    def __init__(self, rng):
        self.amps = rng.uniform(0.4, 1.4, 3)
        self.wavelengths = rng.uniform(40.0, 160.0, 3)
        self.phases = rng.uniform(0.0, 2 * np.pi, 3)

    def height(self, x, y):
        a, w, p = self.amps, self.wavelengths, self.phases
        return (a[0] * np.sin(2 * np.pi * x / w[0] + p[0])
                + a[1] * np.sin(2 * np.pi * y / w[1] + p[1])
                + a[2] * np.sin(2 * np.pi * (x + y) / w[2] + p[2]))


def _build_corridor(rng, n_total):
    length = rng.uniform(170.0, 230.0)
    width = 40.0
    terrain = _Terrain(rng)
    parts = []

    parts.append(_ground_points(rng, terrain, length, width, round(0.55 * n_total)))
    parts.append(_low_veg(rng, terrain, length, width, round(0.13 * n_total)))
    parts.append(_med_veg(rng, terrain, length, width, round(0.18 * n_total)))

    n_towers = int(rng.integers(2, 5))
    margin = 15.0
    tower_x = np.linspace(margin, length - margin, n_towers)
    tower_y = rng.uniform(-3.0, 3.0, n_towers)
    tops = []
    tower_parts = []
    for tx, ty in zip(tower_x, tower_y):
        pts, top = _lattice_tower(rng, terrain, tx, ty)
        tower_parts.append(pts)
        tops.append(top)
    wire_parts = [_conductor_span(rng, tops[i], tops[i + 1])
                  for i in range(len(tops) - 1)]

    critical = _cap_critical(rng, tower_parts, wire_parts, n_total)
    parts.extend(critical)

    parts.append(_border_patches(rng, terrain, length, width,
                                 n_patches=int(rng.integers(2, 5))))
    parts.append(_noise_points(rng, terrain, length, width, round(0.02 * n_total)))
    return _assemble(parts)


def _build_tower_radius(rng, n_total):
    n_total = min(n_total, 60_000)
    extent = 60.0
    terrain = _Terrain(rng)
    parts = [
        _ground_points(rng, terrain, extent, extent, round(0.58 * n_total)),
        _low_veg(rng, terrain, extent, extent, round(0.15 * n_total)),
        _med_veg(rng, terrain, extent, extent, round(0.20 * n_total)),
    ]
    pts, top = _lattice_tower(rng, terrain, extent / 2, 0.0)
    stub_west = top - np.array([extent / 2, 0.0, 0.0])
    stub_east = top + np.array([extent / 2, 0.0, 0.0])
    wires = [_conductor_span(rng, stub_west, top), _conductor_span(rng, top, stub_east)]
    parts.extend(_cap_critical(rng, [pts], wires, n_total))
    parts.append(_noise_points(rng, terrain, extent, extent, round(0.02 * n_total)))
    return _assemble(parts)


def _build_power_line(rng, n_total):
    n_total = min(n_total, 60_000)
    length, width = 90.0, 30.0
    terrain = _Terrain(rng)
    parts = [
        _ground_points(rng, terrain, length, width, round(0.50 * n_total)),
        _low_veg(rng, terrain, length, width, round(0.12 * n_total)),
        _med_veg(rng, terrain, length, width, round(0.15 * n_total)),
    ]
    z0 = terrain.height(0.0, 0.0) + rng.uniform(12.0, 15.0)
    z1 = terrain.height(length, 0.0) + rng.uniform(12.0, 15.0)
    wires = [_conductor_span(rng, np.array([0.0, 0.0, z0]),
                             np.array([length, 0.0, z1]))]
    parts.extend(_cap_critical(rng, [], wires, n_total))
    parts.append(_noise_points(rng, terrain, length, width, round(0.02 * n_total)))
    return _assemble(parts)


def _build_no_tower(rng, n_total):
    n_total = min(n_total, 60_000)
    length, width = 100.0, 40.0
    terrain = _Terrain(rng)
    parts = [
        _ground_points(rng, terrain, length, width, round(0.60 * n_total)),
        _low_veg(rng, terrain, length, width, round(0.16 * n_total)),
        _med_veg(rng, terrain, length, width, round(0.18 * n_total)),
    ]
    z0 = terrain.height(0.0, 5.0) + rng.uniform(11.0, 14.0)
    z1 = terrain.height(length, 5.0) + rng.uniform(11.0, 14.0)
    wires = [_conductor_span(rng, np.array([0.0, 5.0, z0]),
                             np.array([length, 5.0, z1]))]
    parts.extend(_cap_critical(rng, [], wires, n_total))
    parts.append(_noise_points(rng, terrain, length, width, round(0.02 * n_total)))
    return _assemble(parts)


def _assemble(parts):
    positions = np.concatenate([p for p, _, _ in parts])
    labels = np.concatenate([l for _, l, _ in parts]).astype(np.uint8)
    ambiguous = np.concatenate([a for _, _, a in parts])
    return positions, labels, ambiguous


def _component(positions, label, ambiguous=None):
    n = len(positions)
    labels = np.full(n, label, dtype=np.uint8)
    if ambiguous is None:
        ambiguous = np.zeros(n, dtype=bool)
    return positions, labels, ambiguous


def _ground_points(rng, terrain, length, width, n):
    x = rng.uniform(0.0, length, n)
    y = rng.uniform(-width / 2, width / 2, n)
    z = terrain.height(x, y) + rng.normal(0.0, 0.03, n)
    return _component(np.column_stack([x, y, z]), _GROUND)


def _low_veg(rng, terrain, length, width, n):
    """Shrub blobs: shallow scatter up to ~1.8 m above ground."""
    n_blobs = max(1, n // 500)
    cx = rng.uniform(0.0, length, n_blobs)
    cy = rng.uniform(-width / 2, width / 2, n_blobs)
    radius = rng.uniform(1.5, 5.0, n_blobs)
    blob = rng.integers(0, n_blobs, n)
    r = radius[blob] * np.sqrt(rng.uniform(0.0, 1.0, n))
    theta = rng.uniform(0.0, 2 * np.pi, n)
    x = cx[blob] + r * np.cos(theta)
    y = cy[blob] + r * np.sin(theta)
    h = rng.uniform(0.05, 1.8, n) * rng.uniform(0.4, 1.0, n)
    z = terrain.height(x, y) + h
    return _component(np.column_stack([x, y, z]), _LOW)


def _med_veg(rng, terrain, length, width, n):
    """Tree canopies: ellipsoidal shells between ~2 and 5.5 m."""
    n_trees = max(1, n // 800)
    cx = rng.uniform(0.0, length, n_trees)
    cy = rng.uniform(-width / 2, width / 2, n_trees)
    crown = rng.uniform(1.2, 2.8, n_trees)        # horizontal radius
    center_h = rng.uniform(3.2, 4.2, n_trees)     # canopy center above ground
    vert = rng.uniform(0.8, 1.4, n_trees)         # vertical radius
    tree = rng.integers(0, n_trees, n)

    u = rng.normal(size=(n, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    shell = rng.uniform(0.55, 1.0, n) ** (1 / 3)
    x = cx[tree] + crown[tree] * u[:, 0] * shell
    y = cy[tree] + crown[tree] * u[:, 1] * shell
    h = center_h[tree] + vert[tree] * u[:, 2] * shell
    z = terrain.height(x, y) + np.clip(h, 2.05, 5.5)
    return _component(np.column_stack([x, y, z]), _MED)


def _strut(rng, p0, p1, spacing):
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    dist = np.linalg.norm(p1 - p0)
    count = max(2, int(np.ceil(dist / spacing)))
    t = np.linspace(0.0, 1.0, count)[:, None]
    return p0 + t * (p1 - p0) + rng.normal(0.0, 0.01, (count, 3))


def _lattice_tower(rng, terrain, tx, ty):
    """Tapering 4-leg lattice with diagonal bracing and a top crossarm.

    Returns (points, top attachment center). Braces are kept steep so
    they read as tower structure, not as horizontal conductors.
    """
    z0 = float(terrain.height(tx, ty))
    height = rng.uniform(13.0, 17.0)
    b0, b1 = 1.6, 0.5
    sp = _TOWER_STRUT_SPACING

    def corners(frac):
        b = b0 + (b1 - b0) * frac
        z = z0 + height * frac
        return np.array([[tx + sx * b, ty + sy * b, z]
                         for sx, sy in ((1, 1), (1, -1), (-1, 1), (-1, -1))])

    struts = []
    base, top = corners(0.0), corners(1.0)
    for i in range(4):
        struts.append(_strut(rng, base[i], top[i], sp))

    levels = np.linspace(0.0, 1.0, 7)
    face_pairs = ((0, 1), (1, 3), (3, 2), (2, 0))  # corners sharing a face
    for lo, hi in zip(levels[:-1], levels[1:]):
        clo, chi = corners(lo), corners(hi)
        for a, b in face_pairs:
            struts.append(_strut(rng, clo[a], chi[b], sp))
            struts.append(_strut(rng, clo[b], chi[a], sp))

    arm_z = z0 + height
    struts.append(_strut(rng, [tx, ty - 2.2, arm_z], [tx, ty + 2.2, arm_z], sp))
    points = np.concatenate(struts)
    return _component(points, _TOWER), np.array([tx, ty, arm_z])


def _conductor_span(rng, top_a, top_b):
    """Three sagging conductors between two attachment centers."""
    sag = rng.uniform(1.2, 2.2)
    span = np.linalg.norm(top_b[:2] - top_a[:2])
    count = max(2, int(np.ceil(span / _WIRE_SPACING)))
    t = np.linspace(0.0, 1.0, count)
    pieces = []
    for y_off in (-2.0, 0.0, 2.0):
        a = top_a + np.array([0.0, y_off, 0.0])
        b = top_b + np.array([0.0, y_off, 0.0])
        line = a[None, :] + t[:, None] * (b - a)[None, :]
        line[:, 2] -= 4.0 * sag * t * (1.0 - t)  # parabolic sag
        line += rng.normal(0.0, 0.008, line.shape)
        pieces.append(line)
    return _component(np.concatenate(pieces), _LINE)


def _cap_critical(rng, tower_parts, wire_parts, n_total):
    """Deterministically thin critical-class points below the density cap."""
    parts = list(tower_parts) + list(wire_parts)
    total_critical = sum(len(p[0]) for p in parts)
    budget = int(_CRITICAL_CAP * n_total)
    if total_critical <= budget:
        return parts
    keep_frac = budget / total_critical
    thinned = []
    for positions, labels, amb in parts:
        keep = rng.random(len(positions)) < keep_frac
        thinned.append((positions[keep], labels[keep], amb[keep]))
    return thinned


def _border_patches(rng, terrain, length, width, n_patches):
    """Mixed ground/low-vegetation border disks, marked ambiguous."""
    pieces = []
    for _ in range(n_patches):
        cx = rng.uniform(10.0, length - 10.0)
        cy = rng.uniform(-width / 2 + 5.0, width / 2 - 5.0)
        radius = rng.uniform(2.0, 3.0)
        n = int(40 * np.pi * radius * radius)
        r = radius * np.sqrt(rng.uniform(0.0, 1.0, n))
        theta = rng.uniform(0.0, 2 * np.pi, n)
        x = cx + r * np.cos(theta)
        y = cy + r * np.sin(theta)
        is_low = rng.random(n) < 0.5
        h = np.where(is_low, rng.uniform(0.05, 0.7, n), np.abs(rng.normal(0.0, 0.04, n)))
        z = terrain.height(x, y) + h
        positions = np.column_stack([x, y, z])
        labels = np.where(is_low, _LOW, _GROUND).astype(np.uint8)
        pieces.append((positions, labels, np.ones(n, dtype=bool)))
    positions = np.concatenate([p for p, _, _ in pieces])
    labels = np.concatenate([l for _, l, _ in pieces])
    ambiguous = np.concatenate([a for _, _, a in pieces])
    return positions, labels, ambiguous


def _noise_points(rng, terrain, length, width, n):
    x = rng.uniform(0.0, length, n)
    y = rng.uniform(-width / 2, width / 2, n)
    z = terrain.height(x, y) + rng.uniform(0.5, 28.0, n)
    return _component(np.column_stack([x, y, z]), _NOISE)
