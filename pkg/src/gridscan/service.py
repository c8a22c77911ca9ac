"""HTTP review service over a completed run directory.

Serves flagged segments to reviewers and persists their decisions in an
append-only ``reviews.jsonl`` log. The run artifacts themselves stay
read-only; the only files this service ever writes are the log and
``report.reviewed.json``.
"""

import json
import threading
import time
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from dataclasses import asdict

from .flagging import FlagPolicy, margins
from .io import parse_ply
from .pipeline import RunManifest
from .predictor import load_predictions

VERDICTS = ("confirm_flag", "dismiss_flag", "relabel")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        self.status, self.code, self.message = status, code, message
        super().__init__(message)


def validate_decision(decision: dict, manifest: RunManifest) -> dict:
    """Check a ReviewDecision against the run; returns a normalized copy."""
    if not isinstance(decision, dict):
        raise ApiError(400, "bad_request", "decision must be a JSON object")
    try:
        segment_id = int(decision["segment_id"])
        verdict = decision["verdict"]
    except (KeyError, TypeError, ValueError):
        raise ApiError(400, "bad_request",
                       "decision needs integer segment_id and verdict") from None
    records = {r["segment_id"]: r for r in manifest.segments}
    if segment_id not in records or records[segment_id]["error"] is not None:
        raise ApiError(404, "unknown_segment", f"no segment {segment_id} in this run")
    if verdict not in VERDICTS:
        raise ApiError(400, "bad_verdict", f"verdict must be one of {VERDICTS}")

    relabels = decision.get("relabels")
    if verdict == "relabel":
        if not relabels:
            raise ApiError(400, "bad_relabels", "relabel verdict needs relabels")
        n = records[segment_id]["sampled_count"]
        c = manifest.schema.num_classes
        clean = []
        for item in relabels:
            try:
                idx, cls = int(item[0]), int(item[1])
            except (TypeError, ValueError, IndexError):
                raise ApiError(400, "bad_relabels",
                               "relabels must be [point_index, class_id] pairs") from None
            if not 0 <= idx < n:
                raise ApiError(400, "bad_relabels",
                               f"point index {idx} outside segment of {n} points")
            if not 0 <= cls < c:
                raise ApiError(400, "bad_relabels", f"class id {cls} outside schema")
            clean.append([idx, cls])
        relabels = clean
    elif relabels:
        raise ApiError(400, "bad_relabels",
                       f"relabels are only valid with verdict 'relabel', not {verdict!r}")

    return {
        "segment_id": segment_id,
        "verdict": verdict,
        "relabels": relabels,
        "reviewer": str(decision.get("reviewer", "")),
        "timestamp": float(decision.get("timestamp", time.time())),
        "notes": str(decision.get("notes", "")),
    }


def read_reviews(run_dir) -> list:
    path = Path(run_dir) / "reviews.jsonl"
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


def apply_reviews(run_dir):
    """Replay the review log; returns (revised labels per segment, report).

    Dismissals clear a segment's flag, confirmations restore it, and
    relabels overwrite listed points (the last decision wins). Writes
    ``report.reviewed.json`` next to the original report.
    """
    run_dir = Path(run_dir)
    manifest = RunManifest.load(run_dir)
    report = json.loads((run_dir / "report.json").read_text())
    reviews = read_reviews(run_dir)

    flagged = {s["segment_id"]: s["flagged"] for s in report["segments"]}
    review_count = {s["segment_id"]: 0 for s in report["segments"]}
    labels = {}
    relabeled = {}

    for decision in reviews:
        sid = decision["segment_id"]
        review_count[sid] += 1
        if decision["verdict"] == "confirm_flag":
            flagged[sid] = True
        elif decision["verdict"] == "dismiss_flag":
            flagged[sid] = False
        else:
            if sid not in labels:
                cloud = parse_ply(
                    (manifest.segment_dir(sid) / "points.ply").read_bytes())
                labels[sid] = cloud.labels.copy()
                relabeled[sid] = set()
            for idx, cls in decision["relabels"]:
                labels[sid][idx] = cls
                relabeled[sid].add(idx)

    reviewed = {
        "flagged_count": sum(1 for v in flagged.values() if v),
        "segment_count": report["segment_count"],
        "complete": report["complete"],
        "review_count": len(reviews),
        "segments": [
            {
                **entry,
                "flagged": flagged[entry["segment_id"]],
                "review_count": review_count[entry["segment_id"]],
                "relabeled_points": len(relabeled.get(entry["segment_id"], ())),
            }
            for entry in report["segments"]
        ],
    }
    (run_dir / "report.reviewed.json").write_text(
        json.dumps(reviewed, indent=2, sort_keys=True) + "\n")
    return labels, reviewed


class _RunState:
    def __init__(self, run_dir):
        self.run_dir = Path(run_dir)
        self.manifest = RunManifest.load(run_dir)
        self.lock = threading.Lock()
        self.seq = len(read_reviews(run_dir))

    def append_review(self, decision: dict) -> int:
        line = json.dumps(decision, sort_keys=True)
        with self.lock:
            with open(self.run_dir / "reviews.jsonl", "a") as f:
                f.write(line + "\n")
            self.seq += 1
            return self.seq


def create_app(run_dir, ui_dir=None) -> FastAPI:
    state = _RunState(run_dir)
    manifest = state.manifest
    schema = manifest.schema
    policy = FlagPolicy(**manifest.data["config"].get("flag_policy", {}))
    app = FastAPI(title="gridscan review service")

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"code": exc.code, "message": exc.message})

    def record_of(segment_id: int) -> dict:
        for r in manifest.segments:
            if r["segment_id"] == segment_id and r["error"] is None:
                return r
        raise ApiError(404, "unknown_segment", f"no segment {segment_id} in this run")

    def reviewed_segments() -> set:
        return {d["segment_id"] for d in read_reviews(state.run_dir)}

    @app.get("/api/segments")
    def list_segments(flagged: bool = False):
        seen = reviewed_segments()
        out = []
        for r in sorted(manifest.segments, key=lambda r: r["segment_id"]):
            if r["error"] is not None:
                continue
            if flagged and not r["flagged"]:
                continue
            out.append({
                "segment_id": r["segment_id"],
                "point_count": r["point_count"],
                "sampled_count": r["sampled_count"],
                "flagged": r["flagged"],
                "undecided_count": r["undecided_count"],
                "undecided_fraction": r["undecided_fraction"],
                "reviewed": r["segment_id"] in seen,
            })
        return out

    def segment_payload(segment_id: int):
        rec = record_of(segment_id)
        seg_dir = manifest.segment_dir(segment_id)
        cloud = parse_ply((seg_dir / "points.ply").read_bytes())
        pred = load_predictions(seg_dir / "predictions.bin", cloud, schema)
        flags = json.loads((seg_dir / "flags.json").read_text())
        centroid = cloud.centroid()
        positions = (cloud.positions - centroid).astype("<f4")
        m = margins(pred.probs).astype("<f4")
        return rec, cloud, flags, centroid, positions, m

    @app.get("/api/segments/{segment_id}")
    def get_segment(segment_id: int):
        rec, cloud, flags, centroid, positions, m = segment_payload(segment_id)
        n = cloud.point_count
        return {
            "segment_id": segment_id,
            "point_count": n,
            "interval": rec["interval"],
            "flagged": rec["flagged"],
            "flag_report": flags,
            "offset": [float(v) for v in centroid],
            "classes": schema.to_dict(),
            "policy": asdict(policy),
            "blocks": {
                "positions_bytes": n * 12,
                "labels_bytes": n,
                "margins_bytes": n * 4,
            },
        }

    @app.get("/api/segments/{segment_id}/points")
    def get_segment_points(segment_id: int):
        _, cloud, _, _, positions, m = segment_payload(segment_id)
        blob = positions.tobytes() + cloud.labels.tobytes() + m.tobytes()
        return Response(content=blob, media_type="application/octet-stream")

    @app.post("/api/reviews")
    async def post_review(request: Request):
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "bad_request", "body is not valid JSON") from None
        decision = validate_decision(body, manifest)
        seq = state.append_review(decision)
        return {"seq": seq, "segment_id": decision["segment_id"]}

    @app.get("/api/report")
    def get_report():
        return json.loads((state.run_dir / "report.json").read_text())

    @app.get("/api/report/reviewed")
    def get_report_reviewed():
        _, reviewed = apply_reviews(state.run_dir)
        return reviewed

    if ui_dir is None:
        default_ui = Path("frontend") / "dist"
        ui_dir = default_ui if default_ui.is_dir() else None
    if ui_dir is not None:
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
