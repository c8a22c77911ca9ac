"""Uncertainty flagging: mark low-margin points, cluster them, and decide
per segment whether the whole segment goes to manual review.

A point is "undecided" when its softmax row is not sharp — by default
when the top-1 minus top-2 probability gap falls below the policy
threshold. Undecided points are grouped with density-based clustering
(DBSCAN semantics, fully deterministic) and a segment is flagged when
its undecided total crosses the safety threshold (absolute count or
fraction, whichever trips first).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud
from .predictor import SoftmaxPrediction, argmax_labels


@dataclass(frozen=True)
class FlagPolicy:
    margin_threshold: float = 0.2
    cluster_radius: float = 1.0
    cluster_min_points: int = 5
    segment_undecided_min: int = 100
    segment_undecided_fraction: float = 0.005
    measure: str = "margin"  # or "entropy" (1 - normalized entropy as sharpness)

    def __post_init__(self):
        if not 0.0 < self.margin_threshold < 1.0:
            raise ValueError("margin_threshold must be in (0, 1)")
        if self.cluster_radius <= 0 or self.cluster_min_points < 1:
            raise ValueError("bad clustering parameters")
        if not 0.0 < self.segment_undecided_fraction < 1.0:
            raise ValueError("segment_undecided_fraction must be in (0, 1)")
        if self.measure not in ("margin", "entropy"):
            raise ValueError(f"unknown measure {self.measure!r}")


@dataclass(frozen=True)
class Cluster:
    centroid: np.ndarray
    bounds: tuple
    member_count: int
    member_indices: np.ndarray  # indices into the segment's point array


@dataclass(frozen=True)
class FlagReport:
    segment_id: int
    undecided_count: int
    undecided_fraction: float
    clusters: list
    flagged: bool
    per_class_undecided: dict = field(default_factory=dict)
    unclustered_count: int = 0

    def to_dict(self) -> dict:
        return {
            "segment_id": self.segment_id,
            "undecided_count": self.undecided_count,
            "undecided_fraction": self.undecided_fraction,
            "clusters": [
                {
                    "centroid": [float(v) for v in c.centroid],
                    "bounds": [[float(v) for v in b] for b in c.bounds],
                    "member_count": c.member_count,
                }
                for c in self.clusters
            ],
            "flagged": self.flagged,
            "per_class_undecided": {str(k): int(v)
                                    for k, v in sorted(self.per_class_undecided.items())},
            "unclustered_count": self.unclustered_count,
        }


def margins(probs: np.ndarray) -> np.ndarray:
    """Top-1 minus top-2 probability per row; 1.0 for single-class rows."""
    probs = np.asarray(probs)
    if probs.shape[1] == 1:
        return np.ones(len(probs), dtype=probs.dtype)
    top2 = np.partition(probs, -2, axis=1)[:, -2:]
    return top2[:, 1] - top2[:, 0]


def margin(prob_row) -> float:
    return float(margins(np.asarray(prob_row)[None, :])[0])


def sharpness(pred: SoftmaxPrediction, measure: str = "margin") -> np.ndarray:
    """Per-point confidence score in [0, 1]; low means ambiguous.

    The entropy variant is scaled against ln 2 so a two-way tie scores 0
    like a zero margin does (uniform rows over more classes clip to 0).
    """
    if measure == "margin":
        return margins(pred.probs)
    if pred.probs.shape[1] == 1:
        return np.ones(pred.point_count, dtype=np.float32)
    p = np.clip(pred.probs.astype(np.float64), 1e-12, 1.0)
    entropy = -(p * np.log(p)).sum(axis=1)
    return np.clip(1.0 - entropy / np.log(2.0), 0.0, 1.0).astype(np.float32)


def mark_undecided(pred: SoftmaxPrediction, policy: FlagPolicy) -> np.ndarray:
    """Boolean mask: True where the prediction is not sharp enough."""
    return sharpness(pred, policy.measure) < policy.margin_threshold


def cluster_undecided(points, mask, policy: FlagPolicy):
    """Density-cluster the undecided points (DBSCAN semantics).

    A core point has >= cluster_min_points undecided neighbors within the
    cluster radius (itself included); clusters are connected components
    of core points plus border points, a border point joining the cluster
    of its nearest core (ties to the lowest core index). Returns
    (clusters ordered by lowest member index, unclustered point indices).
    """
    positions = points.positions if isinstance(points, PointCloud) else np.asarray(points)
    mask = np.asarray(mask, dtype=bool)
    if len(mask) != len(positions):
        raise ValueError("mask length does not match points")
    undecided = np.flatnonzero(mask)
    if len(undecided) == 0:
        return [], np.empty(0, dtype=np.int64)

    pts = positions[undecided]
    tree = cKDTree(pts)
    neighborhoods = tree.query_ball_point(pts, policy.cluster_radius)
    core = np.array([len(nb) >= policy.cluster_min_points for nb in neighborhoods])

    parent = np.arange(len(undecided))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in np.flatnonzero(core):
        for j in neighborhoods[i]:
            if core[j]:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    assignment = np.full(len(undecided), -1, dtype=np.int64)
    for i in np.flatnonzero(core):
        assignment[i] = find(i)
    for i in np.flatnonzero(~core):
        # query_ball_point returns unsorted lists for batched queries
        cores_near = sorted(j for j in neighborhoods[i] if core[j])
        if cores_near:
            d = np.linalg.norm(pts[cores_near] - pts[i], axis=1)
            best = cores_near[int(np.argmin(d))]  # argmin keeps the lowest index on ties
            assignment[i] = find(best)

    clusters = []
    for root in np.unique(assignment[assignment >= 0]):
        members = undecided[assignment == root]
        mpos = positions[members]
        clusters.append(Cluster(
            centroid=mpos.mean(axis=0),
            bounds=(tuple(mpos.min(axis=0)), tuple(mpos.max(axis=0))),
            member_count=len(members),
            member_indices=members,
        ))
    clusters.sort(key=lambda c: c.member_indices[0])
    unclustered = undecided[assignment < 0]
    return clusters, unclustered


def flag_segment(points, pred: SoftmaxPrediction, policy: FlagPolicy,
                 segment_id: int = 0) -> FlagReport:
    """Compose margin -> undecided mask -> clusters -> flag decision."""
    positions = points.positions if isinstance(points, PointCloud) else np.asarray(points)
    n = len(positions)
    if pred.point_count != n:
        raise ValueError(
            f"prediction has {pred.point_count} rows for {n} segment points")

    mask = mark_undecided(pred, policy)
    clusters, unclustered = cluster_undecided(positions, mask, policy)
    count = int(mask.sum())
    fraction = count / n if n else 0.0
    flagged = (count >= policy.segment_undecided_min
               or fraction >= policy.segment_undecided_fraction)

    labels = argmax_labels(pred)
    ids, freq = np.unique(labels[mask], return_counts=True)
    per_class = {int(i): int(f) for i, f in zip(ids, freq)}

    return FlagReport(
        segment_id=segment_id,
        undecided_count=count,
        undecided_fraction=fraction,
        clusters=clusters,
        flagged=flagged,
        per_class_undecided=per_class,
        unclustered_count=len(unclustered),
    )
