"""Shared fixtures: randomized clouds and a small prepared run directory."""

import json
import shutil

import numpy as np
import pytest

from gridscan.cloud import TS40K, PointCloud
from gridscan.partition import estimate_corridor_axis, partition_corridor
from gridscan.pipeline import RunConfig, run_inspection
from gridscan.predictor import SoftmaxPrediction, write_predictions
from gridscan.synth import gen_synthetic


def random_cloud(rng, n, rgb=False, intensity=False, normals=False, labels=False,
                 schema=None, scale=100.0):
    """Random cloud with an arbitrary subset of optional attributes."""
    kwargs = {"positions": rng.uniform(-scale, scale, (n, 3))}
    if rgb:
        kwargs["rgb"] = rng.integers(0, 256, (n, 3), dtype=np.uint8)
    if intensity:
        kwargs["intensity"] = rng.uniform(0, 1000, n)
    if normals:
        v = rng.normal(size=(n, 3))
        kwargs["normals"] = v / np.linalg.norm(v, axis=1, keepdims=True)
    if labels:
        top = schema.num_classes if schema else 6
        kwargs["labels"] = rng.integers(0, top, n, dtype=np.uint8)
    return PointCloud(schema=schema, **kwargs)


@pytest.fixture(scope="session")
def small_scene():
    return gen_synthetic("corridor", 11, total_points=40_000)


@pytest.fixture(scope="session")
def base_run(tmp_path_factory, small_scene):
    """A completed run over the small scene, driven by file predictions.

    Predictions are one-hot truth except in the generator's ambiguous
    border patches, where margins are degraded, so at least one segment
    comes out flagged. Tests that mutate the run copy it first.
    """
    root = tmp_path_factory.mktemp("base_run")
    cloud_path = root / "scene.ply"
    run_dir = root / "run"
    scene = gen_synthetic("corridor", 11, out=cloud_path, total_points=40_000)
    cloud = scene.cloud

    axis = estimate_corridor_axis(cloud)
    segments = partition_corridor(cloud, axis)
    pred_dir = root / "preds"
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
                          pred_dir / f"seg_{seg.segment_id}.bin")

    config = RunConfig(
        input=str(cloud_path),
        out=str(run_dir),
        predictor={"kind": "file", "pattern": str(pred_dir / "seg_{id}.bin")},
    )
    manifest = run_inspection(config)
    assert manifest.complete
    assert any(r["flagged"] for r in manifest.segments)
    return run_dir


@pytest.fixture
def run_copy(base_run, tmp_path):
    """Private copy of the base run for tests that write reviews."""
    dest = tmp_path / "run"
    shutil.copytree(base_run, dest)
    return dest
