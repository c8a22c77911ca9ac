# The built-in geometric heuristic predictor, scored against truth.
#
# The pipeline's prediction step normally loads softmax matrices from an
# externally trained model (see the prediction-file format in the
# README). The heuristic baseline exists so everything runs and can be
# verified without one: height bands above a local ground reference,
# linearity/direction cues for conductors, and column-extent cues for
# towers, all pushed through a softmax.

import numpy as np

from gridscan import (ConfusionMatrix, estimate_corridor_axis, filter_ground,
                      gen_synthetic, partition_corridor, predict_heuristic)
from gridscan.metrics import ClassReport
from gridscan.predictor import argmax_labels

cloud = gen_synthetic("corridor", seed=5).cloud
segments = partition_corridor(cloud, estimate_corridor_axis(cloud))

cm = ConfusionMatrix(cloud.schema)
for seg in segments:
    sub = cloud.select(seg.point_indices)
    ground_mask = filter_ground(sub)          # grid-minimum heuristic
    pred = predict_heuristic(sub, ground_mask, cloud.schema)
    cm.accumulate(sub.labels, argmax_labels(pred))

report = ClassReport(cm, betas=(0.5, 1.0, 2.0))
print(report.to_text(row_label="heuristic"))

# F2 weighs recall over precision: a missed conductor is an outage or a
# wildfire risk, a false alarm is just a wasted truck roll.
line = cloud.schema.id_of("power_line")
entry = report.per_class[line]
print(f"\npower_line: recall {entry['recall']:.3f}, "
      f"precision {entry['precision']:.3f}, F2 {entry['f_beta'][2.0]:.3f}")
