"""End-to-end inspection runs: ingest, partition, sample, predict, flag,
reconstruct, and persist everything in a run directory.

Run directory layout::

    manifest.json                   config snapshot + per-segment records
    segments/<id>/points.ply        sampled points with predicted labels
    segments/<id>/predictions.bin   softmax matrix (prediction-file format)
    segments/<id>/flags.json        FlagReport
    segments/<id>/indices.npy       original input indices of sampled points
    labels.ply                      reconstructed labeled output
    report.json                     flag summary across segments
    reviews.jsonl                   append-only review log (starts empty)

A failing segment is recorded and skipped; one corrupt span must not
lose a whole corridor run.
"""

import concurrent.futures
import hashlib
import json
import time
import traceback
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cloud import PointCloud, get_schema
from .flagging import FlagPolicy, flag_segment
from .geometry import farthest_point_sample, filter_ground, propagate_labels
from .geometry import estimate_normals as compute_normals
from .io import FormatError, parse_ply, parse_xyz, read_cache, write_ply
from .metrics import DEFAULT_BETAS, ClassReport, ConfusionMatrix
from .partition import estimate_corridor_axis, partition_corridor
from .predictor import (PredictorParams, argmax_labels, load_predictions,
                        predict_heuristic, write_predictions)


@dataclass(frozen=True)
class RunConfig:
    """Mirror of the JSON run configuration."""

    input: object                   # path or list of paths (.xyz/.ply/.gsc)
    out: str
    schema: str = "ts40k"
    segment_length: float = 50.0
    fps_budget: int = 100_000
    fps_seed_index: int = 0
    predictor: dict = field(default_factory=lambda: {"kind": "heuristic"})
    flag_policy: dict = field(default_factory=dict)
    remove_ground: bool = False
    estimate_normals: bool = False
    label_propagation: str = "subsample_only"
    parallelism: int = 1

    def __post_init__(self):
        if self.label_propagation not in ("subsample_only", "full_cloud"):
            raise ValueError(
                f"label_propagation must be subsample_only or full_cloud, "
                f"got {self.label_propagation!r}")
        if self.predictor.get("kind") not in ("heuristic", "file"):
            raise ValueError("predictor.kind must be 'heuristic' or 'file'")
        if self.predictor["kind"] == "file" and "pattern" not in self.predictor:
            raise ValueError("file predictor needs a 'pattern' with an {id} slot")
        if self.fps_budget < 1 or self.parallelism < 1:
            raise ValueError("fps_budget and parallelism must be positive")

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        return RunConfig(**json.loads(text))

    def to_dict(self) -> dict:
        return asdict(self)


class RunManifest:
    """Loaded manifest of a (possibly partial) run."""

    def __init__(self, data: dict, run_dir):
        self.data = data
        self.run_dir = Path(run_dir)

    @property
    def segments(self) -> list:
        return self.data["segments"]

    @property
    def complete(self) -> bool:
        return self.data["complete"]

    @property
    def schema(self):
        return get_schema(self.data["schema"])

    def segment_dir(self, segment_id: int) -> Path:
        return self.run_dir / "segments" / str(segment_id)

    def save(self) -> None:
        path = self.run_dir / "manifest.json"
        path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")

    @staticmethod
    def load(run_dir) -> "RunManifest":
        path = Path(run_dir) / "manifest.json"
        return RunManifest(json.loads(path.read_text()), run_dir)


def load_cloud(path, schema=None) -> PointCloud:
    """Parse a cloud by file extension (.xyz, .ply, .gsc)."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".xyz":
        return parse_xyz(path.read_bytes(), schema=schema)
    if suffix == ".ply":
        return parse_ply(path.read_bytes(), schema=schema)
    if suffix == ".gsc":
        cloud = read_cache(path)
        return cloud if schema is None else PointCloud(
            positions=cloud.positions, rgb=cloud.rgb, intensity=cloud.intensity,
            normals=cloud.normals, labels=cloud.labels, schema=schema)
    raise FormatError(f"cannot infer format from suffix {suffix!r} of {path}")


def _load_input(config: RunConfig, schema):
    paths = config.input if isinstance(config.input, (list, tuple)) else [config.input]
    digest = hashlib.sha256()
    clouds = []
    for p in paths:
        digest.update(Path(p).read_bytes())
        clouds.append(load_cloud(p, schema=schema))
    if len(clouds) == 1:
        return clouds[0], digest.hexdigest()

    # attributes survive a merge only when every input carries them
    def merge(name):
        parts = [getattr(c, name) for c in clouds]
        if any(p is None for p in parts):
            return None
        return np.concatenate(parts)

    merged = PointCloud(
        positions=np.concatenate([c.positions for c in clouds]),
        rgb=merge("rgb"), intensity=merge("intensity"),
        normals=merge("normals"), labels=merge("labels"),
        schema=schema,
    )
    return merged, digest.hexdigest()


def _process_segment(seg, working, original_indices, config, schema, policy, run_dir):
    """One segment: FPS -> predict -> flag -> write artifacts."""
    sub = working.select(seg.point_indices)
    sample = farthest_point_sample(sub, config.fps_budget,
                                   seed_index=config.fps_seed_index)
    sampled = sub.select(sample.indices)
    sampled_original = original_indices[seg.point_indices[sample.indices]]

    if config.predictor["kind"] == "heuristic":
        params = PredictorParams(**config.predictor.get("params", {}))
        mask = filter_ground(sampled)
        pred = predict_heuristic(sampled, mask, schema, params)
    else:
        path = config.predictor["pattern"].format(id=seg.segment_id)
        pred = load_predictions(path, sampled, schema)

    report = flag_segment(sampled.positions, pred, policy, segment_id=seg.segment_id)
    labels = argmax_labels(pred)

    seg_dir = run_dir / "segments" / str(seg.segment_id)
    seg_dir.mkdir(parents=True, exist_ok=True)
    out_cloud = sampled.with_labels(labels)
    (seg_dir / "points.ply").write_bytes(write_ply(out_cloud, "binary_little_endian"))
    write_predictions(pred, seg_dir / "predictions.bin")
    (seg_dir / "flags.json").write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    np.save(seg_dir / "indices.npy", sampled_original.astype(np.uint64))

    record = {
        "segment_id": seg.segment_id,
        "interval": [seg.interval[0], seg.interval[1]],
        "point_count": int(seg.point_count),
        "sampled_count": int(len(sample.indices)),
        "coverage_radius": sample.coverage_radius,
        "flagged": report.flagged,
        "undecided_count": report.undecided_count,
        "undecided_fraction": report.undecided_fraction,
        "error": None,
        "files": {
            "points": f"segments/{seg.segment_id}/points.ply",
            "predictions": f"segments/{seg.segment_id}/predictions.bin",
            "flags": f"segments/{seg.segment_id}/flags.json",
            "indices": f"segments/{seg.segment_id}/indices.npy",
        },
    }
    return record, sampled_original, labels


def run_inspection(config: RunConfig) -> RunManifest:
    """Execute the full pipeline and persist a run directory."""
    timing = {"started_at": time.time()}
    schema = get_schema(config.schema)
    policy = FlagPolicy(**config.flag_policy)
    run_dir = Path(config.out)
    run_dir.mkdir(parents=True, exist_ok=True)

    t0 = time.perf_counter()
    original, input_hash = _load_input(config, schema)
    timing["ingest_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    original_indices = np.arange(original.point_count, dtype=np.int64)
    working = original
    if config.remove_ground:
        keep = ~filter_ground(original)
        original_indices = np.flatnonzero(keep)
        working = original.select(original_indices)
    if config.estimate_normals and working.point_count >= 3:
        est = compute_normals(working)
        working = PointCloud(positions=working.positions, rgb=working.rgb,
                             intensity=working.intensity, normals=est.normals,
                             labels=working.labels, schema=schema)
    axis = estimate_corridor_axis(working) if working.point_count >= 2 else None
    segments = (partition_corridor(working, axis, config.segment_length)
                if axis is not None else [])
    timing["partition_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    records = {}
    emitted = {}  # segment_id -> (original indices, predicted labels)

    def work(seg):
        try:
            return seg.segment_id, _process_segment(
                seg, working, original_indices, config, schema, policy, run_dir)
        except Exception as e:  # record and keep going
            return seg.segment_id, {
                "segment_id": seg.segment_id,
                "interval": [seg.interval[0], seg.interval[1]],
                "point_count": int(seg.point_count),
                "sampled_count": 0,
                "coverage_radius": None,
                "flagged": None,
                "undecided_count": None,
                "undecided_fraction": None,
                "error": f"{type(e).__name__}: {e}",
                "error_trace": traceback.format_exc().splitlines()[-1],
                "files": {},
            }

    if config.parallelism > 1 and len(segments) > 1:
        with concurrent.futures.ThreadPoolExecutor(config.parallelism) as pool:
            results = list(pool.map(work, segments))
    else:
        results = [work(seg) for seg in segments]
    for sid, result in results:
        if isinstance(result, tuple):
            record, idx, labels = result
            records[sid] = record
            emitted[sid] = (idx, labels)
        else:
            records[sid] = result
    timing["segments_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    ordered = [records[sid] for sid in sorted(records)]
    complete = all(r["error"] is None for r in ordered)
    if emitted:
        all_idx = np.concatenate([emitted[sid][0] for sid in sorted(emitted)])
        all_labels = np.concatenate([emitted[sid][1] for sid in sorted(emitted)])
        if config.label_propagation == "full_cloud":
            labels = propagate_labels(original, all_idx, all_labels)
            out_cloud = original.with_labels(labels)
        else:
            out_cloud = original.select(all_idx).with_labels(all_labels)
        (run_dir / "labels.ply").write_bytes(write_ply(out_cloud, "binary_little_endian"))
    timing["outputs_s"] = time.perf_counter() - t0
    timing["finished_at"] = time.time()

    manifest = RunManifest({
        "tool_version": __version__,
        "config": config.to_dict(),
        "input_hash": input_hash,
        "schema": schema.name,
        "axis": None if axis is None else {
            "origin": [float(v) for v in axis.origin],
            "direction": [float(v) for v in axis.direction],
            "degenerate": axis.degenerate,
        },
        "point_count": int(original.point_count),
        "working_point_count": int(working.point_count),
        "segments": ordered,
        "complete": complete,
        "label_propagation": config.label_propagation,
        "timing": timing,  # the only nondeterministic field
    }, run_dir)
    manifest.save()

    report = {
        "flagged_count": sum(1 for r in ordered if r.get("flagged")),
        "segment_count": len(ordered),
        "complete": complete,
        "segments": [
            {k: r[k] for k in ("segment_id", "flagged", "undecided_count",
                               "undecided_fraction", "point_count",
                               "sampled_count", "error")}
            for r in ordered
        ],
    }
    (run_dir / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n")
    (run_dir / "reviews.jsonl").touch()
    return manifest


def emitted_indices(manifest: RunManifest) -> np.ndarray:
    """Original input indices of all emitted points, in emission order."""
    parts = []
    for rec in manifest.segments:
        if rec["error"] is None:
            parts.append(np.load(manifest.run_dir / rec["files"]["indices"]))
    if not parts:
        return np.empty(0, dtype=np.int64)
    return np.concatenate(parts).astype(np.int64)


def evaluate(run_dir, truth, betas=DEFAULT_BETAS, ignore=()) -> ClassReport:
    """Score a run against ground truth labels.

    ``truth`` is a labeled cloud file (or a label array) aligned with the
    original input; emitted points are matched through the index mapping
    stored in the manifest.
    """
    manifest = RunManifest.load(run_dir)
    schema = manifest.schema

    if isinstance(truth, (str, Path)):
        truth_cloud = load_cloud(truth, schema=schema)
        if truth_cloud.labels is None:
            raise ValueError(f"truth file {truth} carries no labels")
        truth_labels = truth_cloud.labels
    else:
        truth_labels = np.asarray(truth, dtype=np.uint8)
    if len(truth_labels) != manifest.data["point_count"]:
        raise ValueError(
            f"truth has {len(truth_labels)} labels but the run ingested "
            f"{manifest.data['point_count']} points")

    out = parse_ply((manifest.run_dir / "labels.ply").read_bytes())
    if out.labels is None:
        raise ValueError("labels.ply carries no labels")

    if manifest.data["label_propagation"] == "full_cloud":
        if out.point_count != len(truth_labels):
            raise ValueError("full-cloud output does not align with truth")
        truth_sub = truth_labels
    else:
        idx = emitted_indices(manifest)
        if len(idx) != out.point_count:
            raise ValueError("emitted index mapping does not align with labels.ply")
        truth_sub = truth_labels[idx]

    cm = ConfusionMatrix(schema).accumulate(truth_sub, out.labels, ignore=ignore)
    return ClassReport(cm, betas=betas, ignore=ignore)
