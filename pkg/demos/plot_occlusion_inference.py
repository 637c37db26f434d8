"""
Carrying a hidden object through an occlusion
=============================================

A small fruit sits in front of a large one. For three frames the detector
misses the small fruit. IBTA keeps its identity by moving it along with its
larger partner, and marks those frames as inferred (status I). The centroid
tracker has no such memory and gives the fruit a new identity when it
reappears.
"""

from ibtrack.geometry import BBox
from ibtrack.metrics import evaluate
from ibtrack.simulator import Occlusion, SceneConfig, SimObject, simulate
from ibtrack.trackers import TrackerConfig, run_tracker

objects = (SimObject(1, 2, BBox(200, 100, 50, 50)),   # large mature fruit
           SimObject(2, 2, BBox(190, 115, 25, 25)))   # small one overlapping its left edge
scene = SceneConfig(frames=12, v_avg=12, v_max=12, objects=objects,
                    occlusions=(Occlusion(class_id=2, small_id=2, large_id=1, first=5, last=7),))
truth, dets = simulate(scene)
print(f"{len(truth)} ground-truth boxes, {len(dets)} detections")

cfg = TrackerConfig(v_avg=12, v_max=12)

# IBTA: watch the I records in frames 5 to 7.
for r in run_tracker("ibta", dets, cfg, scene.frames):
    if r.bbox.width == 25:
        print(f"frame {r.frame:>2}  id {r.track_id}  status {r.status}  y={r.bbox.y_min:.0f}")

for name in ("ibta", "cta", "sort"):
    row = evaluate(truth, run_tracker(name, dets, cfg, scene.frames))[0]
    print(f"{name:>4}: MOTA {row.mota:.3f}  IDs {row.idsw}")
