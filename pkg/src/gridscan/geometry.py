"""Spatial queries and geometric preprocessing.

Exact k-d tree queries (scipy backend), greedy farthest point sampling,
PCA normal estimation, grid-minimum ground filtering, and nearest-neighbor
label propagation. All operations recenter coordinates to the cloud
centroid before computing, so geo-referenced inputs keep full precision.
"""

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from .cloud import PointCloud

DEFAULT_LEAF_SIZE = 32
DEFAULT_NORMAL_NEIGHBORS = 16
DEFAULT_GROUND_CELL = 1.0
DEFAULT_GROUND_TOL = 0.3

_DEGENERATE_EIGENVALUE = 1e-18


class SpatialIndex:
    """Exact nearest-neighbor index over a cloud's positions.

    Read-only after construction; queries return globally minimal
    distances (no approximation).
    """

    def __init__(self, cloud: PointCloud, leaf_size: int = DEFAULT_LEAF_SIZE):
        if leaf_size < 1:
            raise ValueError("leaf_size must be positive")
        self.cloud = cloud
        self.leaf_size = leaf_size
        self._offset = cloud.centroid()
        self._tree = cKDTree(cloud.positions - self._offset, leafsize=leaf_size)

    def __len__(self):
        return self.cloud.point_count

    def nearest(self, query):
        """Nearest point index and distance for one query point or a batch."""
        if not len(self):
            raise ValueError("nearest query on empty index")
        q = np.asarray(query, dtype=np.float64)
        d, i = self._tree.query(q - self._offset, k=1, workers=-1)
        return i, d

    def k_nearest(self, query, k: int):
        """Indices and distances of the k nearest points, nearest first."""
        if k < 1:
            raise ValueError("k must be positive")
        if k > len(self):
            raise ValueError(f"k={k} exceeds point count {len(self)}")
        q = np.asarray(query, dtype=np.float64)
        d, i = self._tree.query(q - self._offset, k=k, workers=-1)
        if k == 1:  # keep a trailing axis so callers see (..., k)
            d, i = np.expand_dims(d, -1), np.expand_dims(i, -1)
        return i, d

    def radius(self, query, r: float):
        """Sorted indices of all points within distance r (inclusive)."""
        if r < 0:
            raise ValueError("radius must be non-negative")
        q = np.asarray(query, dtype=np.float64)
        hits = self._tree.query_ball_point(q - self._offset, r)
        if q.ndim == 1:
            return np.sort(np.asarray(hits, dtype=np.int64))
        return [np.sort(np.asarray(h, dtype=np.int64)) for h in hits]


def build_index(cloud: PointCloud, leaf_size: int = DEFAULT_LEAF_SIZE) -> SpatialIndex:
    return SpatialIndex(cloud, leaf_size=leaf_size)


@dataclass(frozen=True)
class SampleResult:
    """Farthest-point-sampling output: indices in greedy selection order."""

    indices: np.ndarray
    coverage_radius: float


def _fps_numpy(pts, k, seed):
    # distance-cache greedy; selected entries are parked at -1
    n = len(pts)
    sel = np.empty(k, dtype=np.int64)
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    dx = x - pts[seed, 0]
    dy = y - pts[seed, 1]
    dz = z - pts[seed, 2]
    dist = dx * dx + dy * dy + dz * dz
    sel[0] = seed
    dist[seed] = -1.0
    for i in range(1, k):
        nxt = int(np.argmax(dist))
        sel[i] = nxt
        dx = x - pts[nxt, 0]
        dy = y - pts[nxt, 1]
        dz = z - pts[nxt, 2]
        nd = dx * dx + dy * dy + dz * dz
        np.minimum(dist, nd, out=dist)
        dist[nxt] = -1.0
    return sel, dist


def _fps_kernel(pts, k, seed):
    n = pts.shape[0]
    sel = np.empty(k, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    sx, sy, sz = pts[seed, 0], pts[seed, 1], pts[seed, 2]
    for j in range(n):
        dx = pts[j, 0] - sx
        dy = pts[j, 1] - sy
        dz = pts[j, 2] - sz
        dist[j] = dx * dx + dy * dy + dz * dz
    sel[0] = seed
    dist[seed] = -1.0
    for i in range(1, k):
        best = 0
        bestd = dist[0]
        for j in range(1, n):
            if dist[j] > bestd:
                bestd = dist[j]
                best = j
        sel[i] = best
        bx, by, bz = pts[best, 0], pts[best, 1], pts[best, 2]
        for j in range(n):
            dx = pts[j, 0] - bx
            dy = pts[j, 1] - by
            dz = pts[j, 2] - bz
            d = dx * dx + dy * dy + dz * dz
            if d < dist[j]:
                dist[j] = d
        dist[best] = -1.0
    return sel, dist


_fps_fast = None


def _get_fps_fast():
    """JIT-compile the FPS kernel once; fall back to numpy if numba is absent."""
    global _fps_fast
    if _fps_fast is None:
        try:
            from numba import njit
            _fps_fast = njit(cache=True)(_fps_kernel)
        except ImportError:
            _fps_fast = _fps_numpy
    return _fps_fast


def farthest_point_sample(cloud: PointCloud, k: int, seed_index: int = 0) -> SampleResult:
    """Greedy farthest point sampling down to k points.

    The seed is index 0 unless ``seed_index`` says otherwise; every later
    pick maximizes the distance to the already-selected set, with exact
    distance ties broken by the lowest unselected index. If the cloud has
    at most k points, all indices are returned in ascending order.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = cloud.point_count
    if not 0 <= seed_index < max(n, 1):
        raise ValueError(f"seed_index {seed_index} out of range for {n} points")
    if n <= k:
        return SampleResult(np.arange(n, dtype=np.int64), 0.0)

    pts = np.ascontiguousarray(cloud.positions - cloud.centroid())
    sel, dist = _get_fps_fast()(pts, k, seed_index)
    # selected entries hold the -1 sentinel; their true distance is 0
    coverage = float(np.sqrt(max(float(dist.max()), 0.0)))
    return SampleResult(sel, coverage)


@dataclass(frozen=True)
class NormalEstimate:
    normals: np.ndarray
    degenerate: np.ndarray  # True where the neighborhood was coincident


def knn_pca(positions: np.ndarray, k_neighbors: int):
    """Per-point PCA of the k-nearest-neighbor neighborhood (self included).

    Returns (eigenvalues ascending (n, 3), eigenvectors (n, 3, 3) with
    column j belonging to eigenvalue j, neighbor indices (n, k)).
    """
    n = len(positions)
    k = min(k_neighbors, n)
    tree = cKDTree(positions)
    _, idx = tree.query(positions, k=k, workers=-1)
    if k == 1:
        idx = idx[:, None]
    neigh = positions[idx]
    centered = neigh - neigh.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered) / k
    evals, evecs = np.linalg.eigh(cov)
    return evals, evecs, idx


def estimate_normals(cloud: PointCloud, k_neighbors: int = DEFAULT_NORMAL_NEIGHBORS) -> NormalEstimate:
    """Unit surface normals from the smallest PCA eigenvector of each k-NN
    neighborhood, canonicalized so z >= 0 (ties: y >= 0, then x >= 0).

    Coincident (zero-variance) neighborhoods get (0, 0, 1) and are marked
    in the ``degenerate`` mask.
    """
    if cloud.point_count < 3:
        raise ValueError("normal estimation needs at least 3 points")
    if k_neighbors < 3:
        raise ValueError("k_neighbors must be >= 3")

    pts = cloud.positions - cloud.centroid()
    evals, evecs, _ = knn_pca(pts, k_neighbors)
    normals = evecs[:, :, 0].copy()
    degenerate = evals[:, 2] < _DEGENERATE_EIGENVALUE
    normals[degenerate] = (0.0, 0.0, 1.0)

    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    x, y, z = normals[:, 0], normals[:, 1], normals[:, 2]
    flip = (z < 0) | ((z == 0) & ((y < 0) | ((y == 0) & (x < 0))))
    normals[flip] *= -1.0
    return NormalEstimate(normals, degenerate)


def ground_reference(positions: np.ndarray, cell_size: float = DEFAULT_GROUND_CELL) -> np.ndarray:
    """Per-point reference ground height from a 2D grid over (x, y).

    A cell's reference is the minimum z over the cell and its 8 neighbors;
    every point inherits the reference of its cell.
    """
    if cell_size <= 0:
        raise ValueError("cell_size must be positive")
    if not len(positions):
        return np.zeros(0)
    x, y, z = positions.T
    ix = np.floor((x - x.min()) / cell_size).astype(np.int64)
    iy = np.floor((y - y.min()) / cell_size).astype(np.int64)
    cells = (ix.max() + 1) * (iy.max() + 1)
    if cells > 200_000_000:
        raise ValueError(
            f"ground grid would need {cells} cells; raise cell_size for this extent")
    grid = np.full((ix.max() + 1, iy.max() + 1), np.inf)
    np.minimum.at(grid, (ix, iy), z)
    ref = ndimage.minimum_filter(grid, size=3, mode="constant", cval=np.inf)
    return ref[ix, iy]


def filter_ground(cloud: PointCloud, cell_size: float = DEFAULT_GROUND_CELL,
                  z_tolerance: float = DEFAULT_GROUND_TOL) -> np.ndarray:
    """Boolean mask (True = ground) from a grid-minimum height heuristic.

    A point is ground iff z minus its cell's reference height (see
    ground_reference) is at most z_tolerance.
    """
    if z_tolerance <= 0:
        raise ValueError("z_tolerance must be positive")
    if cloud.point_count == 0:
        return np.zeros(0, dtype=bool)
    ref = ground_reference(cloud.positions, cell_size)
    return (cloud.positions[:, 2] - ref) <= z_tolerance


def propagate_labels(full: PointCloud, labeled_subset_indices, subset_labels) -> np.ndarray:
    """Assign every point the label of its nearest labeled subset point.

    Exact distance ties go to the candidate appearing earliest in the
    subset list.
    """
    subset = np.asarray(labeled_subset_indices, dtype=np.int64)
    labels = np.asarray(subset_labels, dtype=np.uint8)
    if len(subset) == 0:
        raise ValueError("labeled subset is empty")
    if len(subset) != len(labels):
        raise ValueError("subset indices and labels differ in length")
    if subset.min() < 0 or subset.max() >= full.point_count:
        raise ValueError("subset index out of range")

    offset = full.centroid()
    qpts = full.positions - offset
    sub_pts = qpts[subset]
    if len(subset) == 1:
        return np.full(full.point_count, labels[0], dtype=np.uint8)

    tree = cKDTree(sub_pts)
    d, i = tree.query(qpts, k=2, workers=-1)
    winner = i[:, 0].copy()
    tied = d[:, 0] == d[:, 1]
    if tied.any():
        # multi-way tie: collect the full cohort at the minimal distance
        for row in np.flatnonzero(tied):
            cohort = tree.query_ball_point(qpts[row], d[row, 0])
            winner[row] = min(cohort)
    return labels[winner]
