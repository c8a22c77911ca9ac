"""Corridor partitioning: split a scan into contiguous ~50 m segments.

The corridor axis comes from a 2D PCA over (x, y); points are projected
onto it and binned into half-open segment-length intervals. Sparse bins
are merged into their lower-t neighbor so no tiny trailing segments
survive.
"""

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud

DEFAULT_SEGMENT_LENGTH = 50.0
DEFAULT_MIN_POINTS = 1000


@dataclass(frozen=True)
class CorridorAxis:
    origin: np.ndarray          # 3D cloud centroid
    direction: np.ndarray       # unit 2D vector in the xy-plane
    degenerate: bool = False    # isotropic covariance; direction fell back to (1, 0)


@dataclass(frozen=True)
class Segment:
    segment_id: int
    point_indices: np.ndarray   # ascending indices into the source cloud
    interval: tuple             # (t_start, t_end) meters along the axis
    bounds: tuple               # ((xmin, ymin, zmin), (xmax, ymax, zmax))

    @property
    def point_count(self) -> int:
        return len(self.point_indices)


def estimate_corridor_axis(cloud: PointCloud) -> CorridorAxis:
    """Principal horizontal direction of the cloud, sign-canonicalized so
    the x-component is >= 0 (tie: y >= 0)."""
    if cloud.point_count < 2:
        raise ValueError("corridor axis needs at least 2 points")
    origin = cloud.centroid()
    xy = cloud.positions[:, :2] - origin[:2]
    cov = xy.T @ xy / len(xy)
    evals, evecs = np.linalg.eigh(cov)
    degenerate = bool(np.isclose(evals[0], evals[1], rtol=1e-9, atol=1e-12))
    if degenerate:
        direction = np.array([1.0, 0.0])
    else:
        direction = evecs[:, 1]  # largest eigenvalue
        if direction[0] < 0 or (direction[0] == 0 and direction[1] < 0):
            direction = -direction
    return CorridorAxis(origin=origin, direction=direction, degenerate=degenerate)


def project_along_axis(cloud: PointCloud, axis: CorridorAxis) -> np.ndarray:
    """Signed coordinate of every point along the corridor axis (meters)."""
    xy = cloud.positions[:, :2] - axis.origin[:2]
    return xy @ axis.direction


def partition_corridor(cloud: PointCloud, axis: CorridorAxis,
                       segment_length: float = DEFAULT_SEGMENT_LENGTH,
                       min_points: int = DEFAULT_MIN_POINTS) -> list:
    """Partition the cloud into contiguous along-axis segments.

    Bins are [t_min + i*L, t_min + (i+1)*L); the maximal point lands in
    the last bin. A bin with fewer than ``min_points`` points is merged
    into its lower-t neighbor (the first bin merges upward). Every point
    index lands in exactly one segment.
    """
    if segment_length <= 0:
        raise ValueError("segment_length must be positive")
    if cloud.point_count == 0:
        return []

    t = project_along_axis(cloud, axis)
    t_min = float(t.min())
    span = float(t.max()) - t_min
    nbins = max(1, int(np.ceil(span / segment_length)))
    bin_of = np.floor((t - t_min) / segment_length).astype(np.int64)
    np.clip(bin_of, 0, nbins - 1, out=bin_of)  # the max point joins the last bin

    # merge sparse bins into their lower-t neighbor; leading sparse bins
    # have no lower neighbor yet and ride upward into the first keeper
    merged = []  # (index array, (t_start, t_end))
    carry = None
    for b in range(nbins):
        idx = np.flatnonzero(bin_of == b)
        lo, hi = t_min + b * segment_length, t_min + (b + 1) * segment_length
        if carry is not None:
            idx = np.concatenate([carry[0], idx])
            lo = carry[1]
            carry = None
        if len(idx) >= max(min_points, 1):  # an empty bin never stands alone
            merged.append((idx, (lo, hi)))
        elif merged:
            pidx, (plo, _) = merged[-1]
            merged[-1] = (np.concatenate([pidx, idx]), (plo, hi))
        else:
            carry = (idx, lo)
    if carry is not None:  # every bin was sparse: keep one segment of all points
        merged.append((carry[0], (carry[1], t_min + nbins * segment_length)))

    segments = []
    for sid, (idx, interval) in enumerate(merged):
        idx = np.sort(idx)
        pos = cloud.positions[idx]
        bounds = (tuple(pos.min(axis=0)), tuple(pos.max(axis=0)))
        segments.append(Segment(segment_id=sid, point_indices=idx,
                                interval=interval, bounds=bounds))
    return segments
