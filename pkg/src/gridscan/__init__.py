"""gridscan: LiDAR corridor inspection toolkit.

Partition corridor scans into ~50 m segments, downsample with farthest
point sampling, attach per-point softmax predictions (external model
files or a built-in geometric heuristic), flag uncertain segments for
manual review, reconstruct labels, and evaluate with IoU/F-beta.
"""

__version__ = "0.1.0"

from .cloud import TS40K, TSRGB, ClassSchema, PointCloud, get_schema
from .flagging import FlagPolicy, FlagReport, flag_segment
from .geometry import (SpatialIndex, build_index, estimate_normals,
                       farthest_point_sample, filter_ground, propagate_labels)
from .metrics import ClassReport, ConfusionMatrix, f_beta, iou, miou
from .partition import Segment, estimate_corridor_axis, partition_corridor
from .pipeline import RunConfig, RunManifest, evaluate, run_inspection
from .predictor import (PredictorParams, SoftmaxPrediction, argmax_labels,
                        load_predictions, predict_heuristic, write_predictions)
from .synth import gen_synthetic

__all__ = [
    "__version__",
    "PointCloud", "ClassSchema", "TS40K", "TSRGB", "get_schema",
    "SpatialIndex", "build_index", "farthest_point_sample",
    "estimate_normals", "filter_ground", "propagate_labels",
    "Segment", "estimate_corridor_axis", "partition_corridor",
    "SoftmaxPrediction", "PredictorParams", "load_predictions",
    "predict_heuristic", "argmax_labels", "write_predictions",
    "FlagPolicy", "FlagReport", "flag_segment",
    "ConfusionMatrix", "ClassReport", "iou", "miou", "f_beta",
    "RunConfig", "RunManifest", "run_inspection", "evaluate",
    "gen_synthetic",
]
