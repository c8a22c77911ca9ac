# Corridor partitioning and farthest point sampling.
#
# Step 1 of the inspection flow slices the corridor into contiguous
# ~50 m segments along its dominant horizontal axis; step 2 standardizes
# each segment's size with farthest point sampling, which keeps points
# spread as far apart as possible.

import numpy as np

from gridscan import (estimate_corridor_axis, farthest_point_sample,
                      gen_synthetic, partition_corridor)

cloud = gen_synthetic("corridor", seed=7).cloud

axis = estimate_corridor_axis(cloud)
print(f"corridor axis: direction=({axis.direction[0]:+.3f}, "
      f"{axis.direction[1]:+.3f}) in the xy-plane")

segments = partition_corridor(cloud, axis, segment_length=50.0)
print(f"\n{len(segments)} segments:")
for seg in segments:
    lo, hi = seg.interval
    print(f"  segment {seg.segment_id}: t in [{lo:7.1f}, {hi:7.1f}) m, "
          f"{seg.point_count} points")

covered = sum(s.point_count for s in segments)
assert covered == cloud.point_count  # exact partition, no point lost

# FPS on one segment: watch the coverage radius (the farthest any point
# sits from its nearest sample) shrink as the budget grows.
seg = segments[1]
sub = cloud.select(seg.point_indices)
print(f"\nFPS on segment {seg.segment_id} ({sub.point_count} points):")
for k in (100, 1_000, 10_000):
    result = farthest_point_sample(sub, k)
    print(f"  k={k:6d}: coverage radius {result.coverage_radius:6.2f} m")

# The selection order is the greedy order itself: the first few picks
# sketch the segment's extremes.
first = farthest_point_sample(sub, 5)
print("\nfirst five picks (greedy order):")
for rank, i in enumerate(first.indices):
    x, y, z = sub.positions[i]
    print(f"  {rank}: index {i:6d} at ({x:9.1f}, {y:9.1f}, {z:6.1f})")
