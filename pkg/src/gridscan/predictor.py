"""Per-point softmax prediction over a class schema.

Two routes: ``load_predictions`` reads probability matrices exported by
externally trained models (fixed binary format, bit-exact round-trip),
and ``predict_heuristic`` is a self-contained geometric baseline so the
whole pipeline runs and can be tested without any trained model.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import cKDTree

from .cloud import ClassSchema, PointCloud, SchemaError
from .geometry import ground_reference, knn_pca

ROW_SUM_TOL = 1e-4          # SoftmaxPrediction invariant
RENORM_MAX_DEV = 1e-3       # beyond this a file is considered corrupt
RENORM_SKIP_DEV = 1e-6      # rows this close to 1 are kept bit-exact

# heuristic cue shaping (amplitudes are pre-softmax logits)
_NOISE_FLOOR = 2.5
_GROUND_AMP = 8.0
_VEG_AMP = 6.0
_LINE_AMP = 10.0
_TOWER_AMP = 9.0
_EDGE_WIDTH = 0.5           # meters of linear ramp at band edges
_VEG_DECAY = 3.0            # e-folding above the medium-vegetation band
_LINE_MAX_TILT = 0.5        # |z| of principal direction still "horizontal"
_COMPACT_RADIUS = 2.0       # k-NN radius beyond which a point is isolated
_TOWER_MIN_EXTENT = 8.0     # vertical column extent of a tower cell
_TOWER_FILL_MIN = 0.6       # occupied 1 m slabs / extent within the column
_FEATURE_NEIGHBORS = 16


@dataclass(frozen=True)
class PredictorParams:
    """Tunables of the geometric heuristic baseline."""

    ground_band: float = 0.5
    low_veg_band: float = 2.0
    med_veg_band: float = 5.0
    line_height_min: float = 6.0
    linearity_threshold: float = 0.8
    verticality_threshold: float = 0.7
    temperature: float = 1.0

    def __post_init__(self):
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")


@dataclass(frozen=True)
class SoftmaxPrediction:
    """Row-stochastic (point_count x C) float32 probability matrix."""

    probs: np.ndarray
    schema: ClassSchema

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float32)
        if probs.ndim != 2 or probs.shape[1] != self.schema.num_classes:
            raise ValueError(
                f"probs shape {probs.shape} does not match schema with "
                f"{self.schema.num_classes} classes")
        if len(probs):
            if probs.min() < 0.0 or probs.max() > 1.0:
                raise ValueError("probabilities outside [0, 1]")
            sums = probs.sum(axis=1, dtype=np.float64)
            worst = float(np.abs(sums - 1.0).max())
            if worst > ROW_SUM_TOL:
                raise ValueError(f"row sums deviate from 1 by up to {worst:g}")
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def point_count(self) -> int:
        return len(self.probs)


def argmax_labels(pred: SoftmaxPrediction) -> np.ndarray:
    """Most probable class per row; ties go to the lowest class id."""
    return np.argmax(pred.probs, axis=1).astype(np.uint8)


def write_predictions(pred: SoftmaxPrediction, path) -> None:
    """Export in the prediction-file format (JSON header + float32 rows)."""
    header = {"n": pred.point_count, "c": pred.schema.num_classes,
              "classes": pred.schema.class_names}
    with open(path, "wb") as f:
        f.write(json.dumps(header, separators=(",", ":")).encode("utf-8"))
        f.write(b"\n")
        f.write(np.ascontiguousarray(pred.probs.astype("<f4")).tobytes())


def load_predictions(path, cloud: PointCloud, schema: ClassSchema) -> SoftmaxPrediction:
    """Read a prediction file and validate it against cloud and schema.

    Rows whose sum drifts from 1 by more than 1e-6 (float32 noise) are
    renormalized; a deviation beyond 1e-3 means the file does not belong
    to this cloud or is corrupt, and is an error.
    """
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError("prediction file has no header line")
    try:
        header = json.loads(raw[:nl].decode("utf-8"))
        n, c, classes = header["n"], header["c"], header["classes"]
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError) as e:
        raise ValueError(f"bad prediction header: {e}") from None

    if n != cloud.point_count:
        raise ValueError(
            f"prediction file covers {n} points but cloud has {cloud.point_count}")
    if c != schema.num_classes or list(classes) != schema.class_names:
        raise ValueError(
            f"prediction classes {classes} do not match schema "
            f"{schema.class_names}")

    payload = raw[nl + 1:]
    need = n * c * 4
    if len(payload) != need:
        raise ValueError(
            f"truncated prediction payload: expected {need} bytes, got {len(payload)}")
    probs = np.frombuffer(payload, dtype="<f4").reshape(n, c).copy()

    if n:
        sums = probs.sum(axis=1, dtype=np.float64)
        dev = np.abs(sums - 1.0)
        if dev.max() > RENORM_MAX_DEV:
            row = int(np.argmax(dev))
            raise ValueError(
                f"row {row} sums to {sums[row]:.6f}; deviation "
                f"{dev.max():.2g} exceeds {RENORM_MAX_DEV:g} (wrong file or corrupt)")
        fix = dev > RENORM_SKIP_DEV
        if fix.any():
            probs[fix] = (probs[fix].astype(np.float64)
                          / sums[fix, None]).astype(np.float32)
    return SoftmaxPrediction(probs=probs, schema=schema)


def _ramp(x):
    """Clamp to [0, 1]: linear cue edges instead of hard switches."""
    return np.clip(x, 0.0, 1.0)


def _column_stats(positions, cell_size=1.0):
    """Per-point vertical stats of the 1 m xy-cell the point lives in.

    Returns (height above cell minimum, cell extent, slab fill ratio).
    """
    x, y, z = positions.T
    ix = np.floor((x - x.min()) / cell_size).astype(np.int64)
    iy = np.floor((y - y.min()) / cell_size).astype(np.int64)
    ncols = iy.max() + 1 if len(iy) else 1
    cell = ix * ncols + iy
    uniq = np.unique(cell)
    zmin = np.full(len(uniq), np.inf)
    zmax = np.full(len(uniq), -np.inf)
    cell_pos = np.searchsorted(uniq, cell)
    np.minimum.at(zmin, cell_pos, z)
    np.maximum.at(zmax, cell_pos, z)

    slab = np.floor((z - zmin[cell_pos]) / 1.0).astype(np.int64)
    occupied = np.unique(np.stack([cell_pos, slab], axis=1), axis=0)
    nslabs = np.bincount(occupied[:, 0], minlength=len(uniq))

    extent = zmax - zmin
    fill = nslabs / np.maximum(np.ceil(extent), 1.0)
    return extent[cell_pos], fill[cell_pos]


def predict_heuristic(cloud: PointCloud, ground_mask, schema: ClassSchema,
                      params: PredictorParams = PredictorParams()) -> SoftmaxPrediction:
    """Geometric baseline: per-point class scores from height bands and
    local shape, pushed through a softmax.

    Heights are measured above a grid-minimum ground reference; shape
    cues (linearity, principal direction, neighborhood compactness) come
    from k-NN PCA. Deterministic for a fixed cloud and parameters.
    """
    names = set(schema.class_names)
    veg_split = {"low_vegetation", "medium_vegetation"} <= names
    if "vegetation" not in names and not veg_split:
        raise SchemaError(f"schema {schema.name!r} lacks vegetation classes")
    for required in ("noise", "tower", "power_line"):
        if required not in names:
            raise SchemaError(f"schema {schema.name!r} lacks class {required!r}")

    n = cloud.point_count
    ground_mask = np.asarray(ground_mask, dtype=bool)
    if len(ground_mask) != n:
        raise ValueError("ground mask length does not match cloud")
    scores = np.zeros((n, schema.num_classes), dtype=np.float64)
    if n == 0:
        return SoftmaxPrediction(np.zeros((0, schema.num_classes), np.float32), schema)

    pts = cloud.positions - cloud.centroid()

    # height above the local ground reference (same grid as filter_ground)
    h = cloud.positions[:, 2] - ground_reference(cloud.positions)

    evals, evecs, _ = knn_pca(pts, _FEATURE_NEIGHBORS)
    lam1 = evals[:, 2]
    with np.errstate(invalid="ignore", divide="ignore"):
        linearity = np.where(lam1 > 0, (evals[:, 2] - evals[:, 1]) / lam1, 0.0)
    principal = evecs[:, :, 2]
    tilt = np.abs(principal[:, 2])

    k = min(_FEATURE_NEIGHBORS, n)
    kdist = cKDTree(pts).query(pts, k=k, workers=-1)[0]
    kdist = kdist[:, -1] if k > 1 else np.zeros(n)
    compact = kdist <= _COMPACT_RADIUS

    extent, fill = _column_stats(cloud.positions)

    w = _EDGE_WIDTH
    ground_cue = ground_mask * _ramp((params.ground_band - h) / w + 0.5)
    low_cue = np.maximum(
        _ramp(np.minimum(h - params.ground_band, params.low_veg_band - h) / w + 0.5),
        ~ground_mask * _ramp((params.ground_band - h) / w + 0.5))
    med_cue = _ramp(np.minimum(h - params.low_veg_band, params.med_veg_band - h) / w + 0.5)
    med_cue = np.maximum(
        med_cue,
        (h > params.med_veg_band) * np.exp(-(h - params.med_veg_band) / _VEG_DECAY))
    low_cue = low_cue * compact
    med_cue = med_cue * compact

    line_cue = ((h >= params.line_height_min)
                & (linearity >= params.linearity_threshold)
                & (tilt <= _LINE_MAX_TILT)
                & compact)
    tower_cell = (extent >= _TOWER_MIN_EXTENT) & (fill >= _TOWER_FILL_MIN)
    vertical_strand = ((tilt >= params.verticality_threshold)
                       & (linearity >= params.linearity_threshold)
                       & (h > params.low_veg_band))
    tower_cue = (tower_cell | vertical_strand) & (h > params.ground_band) & compact

    def col(name):
        return schema.id_of(name)

    if "ground" in names:
        scores[:, col("ground")] += _GROUND_AMP * ground_cue
    else:
        low_cue = np.maximum(low_cue, ground_cue)
    if veg_split:
        scores[:, col("low_vegetation")] += _VEG_AMP * low_cue
        scores[:, col("medium_vegetation")] += _VEG_AMP * med_cue
    else:
        scores[:, col("vegetation")] += _VEG_AMP * np.maximum(low_cue, med_cue)
    scores[:, col("power_line")] += _LINE_AMP * line_cue
    scores[:, col("tower")] += _TOWER_AMP * tower_cue
    scores[:, col("noise")] += _NOISE_FLOOR

    logits = scores / params.temperature
    logits -= logits.max(axis=1, keepdims=True)
    expd = np.exp(logits)
    probs = expd / expd.sum(axis=1, keepdims=True)
    return SoftmaxPrediction(probs.astype(np.float32), schema)
