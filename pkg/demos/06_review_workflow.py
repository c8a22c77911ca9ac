# The manual-review half of the workflow, over live HTTP.
#
# A run directory is served by the review service; reviewers list
# flagged segments, pull point payloads, and post decisions into an
# append-only log. apply_reviews replays the log into a revised report.
# This demo drives the real HTTP surface with stdlib urllib only.

import json
import tempfile
import threading
import time
import urllib.request
from pathlib import Path

import numpy as np
import uvicorn

from gridscan import RunConfig, gen_synthetic, run_inspection
from gridscan.partition import estimate_corridor_axis, partition_corridor
from gridscan.predictor import SoftmaxPrediction, write_predictions
from gridscan.service import create_app

workdir = Path(tempfile.mkdtemp(prefix="gridscan_review_"))
scene = gen_synthetic("corridor", seed=12, out=workdir / "scene.ply",
                      total_points=60_000)

# Degrade margins in the ambiguous border patches so something gets
# flagged (a sharp heuristic run has nothing for a reviewer to do).
cloud = scene.cloud
segments = partition_corridor(cloud, estimate_corridor_axis(cloud))
pred_dir = workdir / "preds"
pred_dir.mkdir()
c = cloud.schema.num_classes
for seg in segments:
    labels = cloud.labels[seg.point_indices]
    probs = np.full((len(labels), c), 0.03 / (c - 1), dtype=np.float32)
    probs[np.arange(len(labels)), labels] = 0.97
    fuzzy = scene.ambiguous[seg.point_indices]
    probs[fuzzy] = 1.0 / c
    probs[fuzzy, labels[fuzzy]] += 0.02
    probs[fuzzy] /= probs[fuzzy].sum(axis=1, keepdims=True)
    write_predictions(SoftmaxPrediction(probs, cloud.schema),
                      pred_dir / f"s{seg.segment_id}.bin")

run_dir = workdir / "run"
run_inspection(RunConfig(
    input=str(workdir / "scene.ply"), out=str(run_dir),
    predictor={"kind": "file", "pattern": str(pred_dir / "s{id}.bin")}))

PORT = 8712
server = uvicorn.Server(uvicorn.Config(create_app(run_dir), host="127.0.0.1",
                                       port=PORT, log_level="error"))
threading.Thread(target=server.run, daemon=True).start()
while not server.started:
    time.sleep(0.05)
base = f"http://127.0.0.1:{PORT}"


def get(path):
    with urllib.request.urlopen(base + path) as r:
        return json.loads(r.read())


def post(path, body):
    req = urllib.request.Request(base + path, json.dumps(body).encode(),
                                 {"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as r:
        return json.loads(r.read())


flagged = get("/api/segments?flagged=true")
print(f"{len(flagged)} flagged segment(s) await review:")
for s in flagged:
    print(f"  segment {s['segment_id']}: {s['undecided_count']} undecided "
          f"of {s['sampled_count']}")

sid = flagged[0]["segment_id"]
envelope = get(f"/api/segments/{sid}")
with urllib.request.urlopen(f"{base}/api/segments/{sid}/points") as r:
    blob = r.read()
n = envelope["point_count"]
positions = np.frombuffer(blob[:n * 12], "<f4").reshape(n, 3)
labels = np.frombuffer(blob[n * 12:n * 13], np.uint8)
margins = np.frombuffer(blob[n * 13:], "<f4")
print(f"\npayload for segment {sid}: {n} points, "
      f"{(margins < envelope['policy']['margin_threshold']).sum()} undecided")

# The reviewer confirms the flag, then fixes three points by hand.
ack = post("/api/reviews", {"segment_id": sid, "verdict": "confirm_flag",
                            "reviewer": "demo", "notes": "borders look real"})
print(f"\nposted confirm_flag -> seq {ack['seq']}")
worst = np.argsort(margins)[:3]
ack = post("/api/reviews", {
    "segment_id": sid, "verdict": "relabel", "reviewer": "demo",
    "relabels": [[int(i), int(cloud.schema.id_of("low_vegetation"))]
                 for i in worst]})
print(f"posted relabel of 3 points -> seq {ack['seq']}")

reviewed = get("/api/report/reviewed")
entry = next(s for s in reviewed["segments"] if s["segment_id"] == sid)
print(f"\nreviewed report: segment {sid} flagged={entry['flagged']}, "
      f"{entry['relabeled_points']} point(s) relabeled, "
      f"{reviewed['review_count']} decisions on the log")
print(f"log file: {run_dir / 'reviews.jsonl'}")
server.should_exit = True
