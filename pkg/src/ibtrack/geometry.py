"""Axis-aligned bounding box arithmetic.

Boxes are stored as ``(x_min, y_min, width, height)`` in image pixels.
The scalar functions work on :class:`BBox`; the ``*_matrix`` helpers work on
``(N, 4)`` arrays in the same layout and are what the trackers use in their
inner loops.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Point:
    cx: float
    cy: float

    def __post_init__(self):
        if not (math.isfinite(self.cx) and math.isfinite(self.cy)):
            raise ValueError(f"non-finite point ({self.cx}, {self.cy})")

    def distance(self, other: "Point") -> float:
        return math.hypot(self.cx - other.cx, self.cy - other.cy)


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, ``width`` and ``height`` strictly positive."""

    x_min: float
    y_min: float
    width: float
    height: float

    def __post_init__(self):
        vals = (self.x_min, self.y_min, self.width, self.height)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box {vals}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"box must have positive width and height, got {vals}")

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> "BBox":
        return cls(x1, y1, x2 - x1, y2 - y1)

    @property
    def x_max(self) -> float:
        return self.x_min + self.width

    @property
    def y_max(self) -> float:
        return self.y_min + self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.width, self.height)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0.0 for disjoint boxes."""
    iw = min(a.x_min + a.width, b.x_min + b.width) - max(a.x_min, b.x_min)
    ih = min(a.y_min + a.height, b.y_min + b.height) - max(a.y_min, b.y_min)
    if iw <= 0 or ih <= 0:
        return 0.0
    # corner subtraction can round past the true extent
    iw = min(iw, a.width, b.width)
    ih = min(ih, a.height, b.height)
    inter = iw * ih
    union = a.width * a.height + b.width * b.height - inter
    return inter / union


def center(b: BBox) -> Point:
    return Point(b.x_min + b.width / 2, b.y_min + b.height / 2)


def area(b: BBox) -> float:
    return b.width * b.height


def half_diagonal(b: BBox) -> float:
    return math.hypot(b.width, b.height) / 2


def translate(b: BBox, dx: float, dy: float) -> BBox:
    return BBox(b.x_min + dx, b.y_min + dy, b.width, b.height)


def boxes_to_array(boxes) -> np.ndarray:
    """Stack boxes into an ``(N, 4)`` float array (``x, y, w, h``)."""
    if len(boxes) == 0:
        return np.zeros((0, 4))
    return np.array([b.as_tuple() for b in boxes], dtype=float)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IOU between two ``(N, 4)`` / ``(M, 4)`` xywh arrays."""
    a = np.asarray(a, dtype=float).reshape(-1, 4)
    b = np.asarray(b, dtype=float).reshape(-1, 4)
    ax2 = a[:, 0] + a[:, 2]
    ay2 = a[:, 1] + a[:, 3]
    bx2 = b[:, 0] + b[:, 2]
    by2 = b[:, 1] + b[:, 3]
    iw = np.minimum(ax2[:, None], bx2[None, :]) - np.maximum(a[:, 0][:, None], b[:, 0][None, :])
    ih = np.minimum(ay2[:, None], by2[None, :]) - np.maximum(a[:, 1][:, None], b[:, 1][None, :])
    iw = np.minimum(iw, np.minimum(a[:, 2][:, None], b[:, 2][None, :]))
    ih = np.minimum(ih, np.minimum(a[:, 3][:, None], b[:, 3][None, :]))
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    union = (a[:, 2] * a[:, 3])[:, None] + (b[:, 2] * b[:, 3])[None, :] - inter
    return inter / union


def centers_of(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr, dtype=float).reshape(-1, 4)
    return arr[:, :2] + arr[:, 2:] / 2
