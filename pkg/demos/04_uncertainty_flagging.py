# Flagging uncertain predictions for manual review.
#
# A point whose softmax row is not sharp (top-1 minus top-2 below the
# policy threshold) is "undecided". Undecided points are grouped with
# density clustering, and a segment whose undecided total crosses the
# safety threshold is flagged for a human. Here we degrade the margins
# inside the generator's mixed-class border patches and watch exactly
# those segments get flagged.

import numpy as np

from gridscan import (FlagPolicy, estimate_corridor_axis, flag_segment,
                      gen_synthetic, partition_corridor)
from gridscan.flagging import margins
from gridscan.predictor import SoftmaxPrediction

scene = gen_synthetic("corridor", seed=3)
cloud = scene.cloud
segments = partition_corridor(cloud, estimate_corridor_axis(cloud))
c = cloud.schema.num_classes
policy = FlagPolicy()  # margin < 0.2, flag at >= 100 undecided or 0.5%

print(f"policy: margin<{policy.margin_threshold}, flag at "
      f">={policy.segment_undecided_min} undecided or "
      f">={policy.segment_undecided_fraction:.1%} of the segment\n")

for seg in segments:
    labels = cloud.labels[seg.point_indices]
    # sharp one-hot predictions everywhere...
    probs = np.full((len(labels), c), 0.03 / (c - 1), dtype=np.float32)
    probs[np.arange(len(labels)), labels] = 0.97
    # ...except in the ambiguous border patches
    fuzzy = scene.ambiguous[seg.point_indices]
    probs[fuzzy] = 1.0 / c
    probs[fuzzy, labels[fuzzy]] += 0.02
    probs[fuzzy] /= probs[fuzzy].sum(axis=1, keepdims=True)
    pred = SoftmaxPrediction(probs, cloud.schema)

    report = flag_segment(cloud.positions[seg.point_indices], pred, policy,
                          segment_id=seg.segment_id)
    m = margins(pred.probs)
    status = "FLAGGED" if report.flagged else "ok     "
    print(f"segment {seg.segment_id}: {status} undecided={report.undecided_count:5d} "
          f"({report.undecided_fraction:6.3%})  median margin {np.median(m):.2f}")
    for cl in report.clusters:
        cx, cy, cz = cl.centroid
        print(f"    cluster of {cl.member_count:4d} undecided points near "
              f"({cx:9.1f}, {cy:9.1f}, {cz:5.1f})")

print("\nonly the flagged segments reach a human reviewer; the rest ship as-is")
