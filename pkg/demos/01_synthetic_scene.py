# Generate a synthetic transmission corridor and look at what's in it.
#
# Real corridor scans are not redistributable, so every demo and test in
# this repo runs on generated scenes with exact ground-truth labels:
# undulating terrain, vegetation, lattice towers, sagging conductors,
# sparse sensor noise, and a few deliberately mixed ground/vegetation
# border patches (marked "ambiguous") for the flagging demos.

import numpy as np

from gridscan import gen_synthetic
from gridscan.metrics import class_histogram, inverse_frequency_weights

scene = gen_synthetic("corridor", seed=42, out="/tmp/corridor_42.ply")
cloud = scene.cloud
print(f"generated {cloud.point_count} points -> /tmp/corridor_42.ply")

extent = cloud.positions.max(axis=0) - cloud.positions.min(axis=0)
print(f"bounding box: {extent[0]:.0f} x {extent[1]:.0f} x {extent[2]:.0f} m")

hist = class_histogram(cloud.labels, cloud.schema)
print("\nclass balance:")
for c in cloud.schema.classes:
    marker = " (critical)" if c.is_critical else ""
    print(f"  {c.name:18s} {hist.counts[c.id]:>8d}  {hist.fractions[c.id]:6.2%}{marker}")

# Severe imbalance is the norm in this domain; inverse-frequency weights
# are what an external trainer would consume to counter it.
weights = inverse_frequency_weights(hist.counts)
print("\ninverse-frequency class weights (export for training):")
for c in cloud.schema.classes:
    print(f"  {c.name:18s} {weights.weights[c.id]:8.3f}")

print(f"\nambiguous border points: {scene.ambiguous.sum()} "
      f"({scene.ambiguous.mean():.2%})")

# Other presets: tower_radius (one tower and its surroundings),
# power_line (spans without towers), no_tower (terrain only, maybe lines).
for preset in ("tower_radius", "power_line", "no_tower"):
    small = gen_synthetic(preset, seed=1, total_points=30_000)
    towers = (small.cloud.labels == cloud.schema.id_of("tower")).sum()
    print(f"preset {preset:13s}: {small.cloud.point_count:6d} points, "
          f"{towers} tower points")
