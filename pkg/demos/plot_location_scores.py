"""
Location scores for overlapping boxes
=====================================

Boxes that overlap a larger neighbour get a score describing where they sit
relative to it. The larger box of a pair scores 0. The smaller one scores
1, 2 or 3 depending on which horizontal third of the larger box its centre
falls in. A box with no overlapping neighbour has no score.
"""

from ibtrack.geometry import BBox
from ibtrack.ibta import assign_location_scores, pair_neighbors

# A large box with three smaller boxes peeking out on its left, middle and right.
large = BBox(100, 100, 90, 60)
boxes = [
    large,
    BBox(95, 110, 30, 30),    # centre left of x = 130
    BBox(130, 140, 30, 30),   # centre between 130 and 160
    BBox(165, 110, 30, 30),   # centre right of x = 160
    BBox(400, 400, 30, 30),   # on its own
]

scores, partners = pair_neighbors(boxes, threshold=0.1)
for k, (b, s, p) in enumerate(zip(boxes, scores, partners)):
    print(f"box {k} at x={b.x_min:>5.0f} w={b.width:>3.0f}: score {s}, partner {p}")

# The same scores without the partner list:
print(assign_location_scores(boxes, 0.1))
